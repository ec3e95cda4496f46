use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{Cond, FrontendError, Guard, ProgramAst, Rel, Stmt, StmtKind, TERMINAL};
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Sep,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &[
    "while", "do", "od", "if", "then", "else", "fi", "skip", "ndet", "var", "and", "or", "not", "true", "false",
];

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: line_no, col });
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                push(&mut out, Tok::Int(s.parse().unwrap()));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                push(&mut out, Tok::Ident(s));
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym2 = [":=", ">=", "<=", "==", "!="].into_iter().find(|s| *s == two);
            if let Some(s) = sym2 {
                push(&mut out, Tok::Sym(s));
                i += 2;
                continue;
            }
            let sym1 = match c {
                '(' => "(",
                ')' => ")",
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '^' => "^",
                '>' => ">",
                '<' => "<",
                '=' => "=",
                ':' => ":",
                ';' | ',' => {
                    push(&mut out, Tok::Sep);
                    i += 1;
                    continue;
                }
                '/' | '%' => {
                    return Err(FrontendError::NonPolynomial { line: line_no, col, op: c.to_string() })
                }
                _ => {
                    return Err(FrontendError::Syntax { line: line_no, col, msg: format!("unexpected character `{c}`") })
                }
            };
            push(&mut out, Tok::Sym(sym1));
            i += 1;
        }
        out.push(Token { tok: Tok::Sep, line: line_no, col: chars.len() + 1 });
    }
    let last = out.last().map_or(1, |t| t.line);
    out.push(Token { tok: Tok::Eof, line: last + 1, col: 1 });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    seen_vars: Vec<String>,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(FrontendError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn note_var(&mut self, v: &str) {
        if !self.seen_vars.iter().any(|s| s == v) {
            self.seen_vars.push(v.to_string());
        }
    }

    fn at_block_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof) || self.is_kw("od") || self.is_kw("fi") || self.is_kw("else")
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        self.skip_seps();
        while !self.at_block_end() {
            out.push(self.stmt()?);
            if !self.at_block_end() && *self.peek() != Tok::Sep {
                return self.err("expected statement separator");
            }
            self.skip_seps();
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let mut label = String::new();
        if let (Tok::Ident(s), Tok::Sym(":")) = (self.peek().clone(), self.peek_at(1).clone()) {
            if KEYWORDS.contains(&s.as_str()) {
                return self.err("keyword used as label");
            }
            label = s;
            self.pos += 2;
            // A label may sit on its own line.
            self.skip_seps();
        }
        let kind = if self.is_kw("skip") {
            self.pos += 1;
            StmtKind::Skip
        } else if self.is_kw("while") {
            self.pos += 1;
            let c = self.cond()?;
            self.expect_kw("do")?;
            let body = self.block()?;
            self.expect_kw("od")?;
            StmtKind::While(c, body)
        } else if self.is_kw("if") {
            self.pos += 1;
            let mut arms = Vec::new();
            let mut els = None;
            loop {
                let g = if self.is_sym("*") {
                    self.pos += 1;
                    Guard::Star
                } else {
                    Guard::Cond(self.cond()?)
                };
                self.expect_kw("then")?;
                let b = self.block()?;
                arms.push((g, b));
                if self.is_kw("else") {
                    self.pos += 1;
                    if self.is_kw("if") {
                        self.pos += 1;
                        continue;
                    }
                    els = Some(self.block()?);
                }
                break;
            }
            self.expect_kw("fi")?;
            StmtKind::If(arms, els)
        } else {
            let x = self.ident()?;
            self.note_var(&x);
            self.expect_sym(":=")?;
            if self.is_kw("ndet") {
                self.pos += 1;
                self.expect_sym("(")?;
                self.expect_sym(")")?;
                StmtKind::Ndet(x)
            } else {
                StmtKind::Assign(x, self.expr()?)
            }
        };
        Ok(Stmt { label, kind })
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut c = self.conj()?;
        while self.is_kw("or") {
            self.pos += 1;
            let r = self.conj()?;
            c = Cond::Or(Box::new(c), Box::new(r));
        }
        Ok(c)
    }

    fn conj(&mut self) -> PResult<Cond> {
        let mut c = self.unary()?;
        while self.is_kw("and") {
            self.pos += 1;
            let r = self.unary()?;
            c = Cond::And(Box::new(c), Box::new(r));
        }
        Ok(c)
    }

    fn unary(&mut self) -> PResult<Cond> {
        if self.is_kw("not") {
            self.pos += 1;
            return Ok(Cond::Not(Box::new(self.unary()?)));
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(Cond::True);
        }
        if self.is_kw("false") {
            self.pos += 1;
            return Ok(Cond::False);
        }
        if self.is_sym("(") {
            // Either a parenthesised condition or an arithmetic operand.
            let save = self.pos;
            let saved_vars = self.seen_vars.len();
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.is_sym(")") {
                    self.pos += 1;
                    if !self.at_arith_continuation() {
                        return Ok(c);
                    }
                }
            }
            self.pos = save;
            self.seen_vars.truncate(saved_vars);
        }
        let a = self.expr()?;
        let rel = match self.peek() {
            Tok::Sym(">=") => Rel::Ge,
            Tok::Sym("<=") => Rel::Le,
            Tok::Sym(">") => Rel::Gt,
            Tok::Sym("<") => Rel::Lt,
            Tok::Sym("==") | Tok::Sym("=") => Rel::Eq,
            Tok::Sym("!=") => Rel::Ne,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        let b = self.expr()?;
        Ok(Cond::Cmp(a, rel, b))
    }

    fn at_arith_continuation(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("+" | "-" | "*" | "^" | ">=" | "<=" | ">" | "<" | "==" | "=" | "!=")
        )
    }

    fn expr(&mut self) -> PResult<Poly<String>> {
        let mut e = self.term()?;
        loop {
            if self.is_sym("+") {
                self.pos += 1;
                let t = self.term()?;
                e = &e + &t;
            } else if self.is_sym("-") {
                self.pos += 1;
                let t = self.term()?;
                e = &e - &t;
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> PResult<Poly<String>> {
        let mut e = self.factor()?;
        while self.is_sym("*") {
            self.pos += 1;
            let f = self.factor()?;
            e = &e * &f;
        }
        Ok(e)
    }

    fn factor(&mut self) -> PResult<Poly<String>> {
        if self.is_sym("-") {
            self.pos += 1;
            return Ok(-&self.factor()?);
        }
        let base = self.atom()?;
        if self.is_sym("^") {
            self.pos += 1;
            let e = match self.peek() {
                Tok::Int(k) => k.to_u32(),
                _ => None,
            };
            let Some(e) = e.filter(|e| *e <= 64) else {
                return self.err("exponent must be a small non-negative integer");
            };
            self.pos += 1;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Poly<String>> {
        match self.peek().clone() {
            Tok::Int(k) => {
                self.pos += 1;
                Ok(Poly::constant(k))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                self.note_var(&s);
                Ok(Poly::var(s))
            }
            _ => self.err("expected expression"),
        }
    }
}

fn assigned_vars(ss: &[Stmt], out: &mut HashSet<String>) {
    for s in ss {
        match &s.kind {
            StmtKind::Assign(x, _) | StmtKind::Ndet(x) => {
                out.insert(x.clone());
            }
            StmtKind::While(_, b) => assigned_vars(b, out),
            StmtKind::If(arms, els) => {
                for (_, b) in arms {
                    assigned_vars(b, out);
                }
                if let Some(e) = els {
                    assigned_vars(e, out);
                }
            }
            StmtKind::Skip => {}
        }
    }
}

fn assign_labels(ss: &mut [Stmt], counter: &mut usize, used: &mut BTreeSet<String>) -> Result<(), FrontendError> {
    for s in ss {
        let k = *counter;
        *counter += 1;
        if s.label.is_empty() {
            s.label = format!("l{k}");
        }
        if !used.insert(s.label.clone()) {
            return Err(FrontendError::DuplicateLabel(s.label.clone()));
        }
        match &mut s.kind {
            StmtKind::While(_, b) => assign_labels(b, counter, used)?,
            StmtKind::If(arms, els) => {
                for (_, b) in arms.iter_mut() {
                    assign_labels(b, counter, used)?;
                }
                if let Some(e) = els {
                    assign_labels(e, counter, used)?;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn parse_program(text: &str) -> Result<ProgramAst, FrontendError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, seen_vars: Vec::new() };
    p.skip_seps();
    let mut declared = Vec::new();
    if p.is_kw("var") {
        p.pos += 1;
        while let Tok::Ident(_) = p.peek() {
            let v = p.ident()?;
            p.note_var(&v);
            declared.push(v);
            // Declarations are comma separated on one line.
            let next_is_name = matches!(p.peek_at(1), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()));
            if *p.peek() == Tok::Sep && next_is_name && p.toks[p.pos].line == p.toks[p.pos + 1].line {
                p.pos += 1;
            } else {
                break;
            }
        }
    }
    let stmts = p.block()?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected token");
    }
    let mut assigned = HashSet::new();
    assigned_vars(&stmts, &mut assigned);
    for v in &p.seen_vars {
        if !assigned.contains(v) && !declared.contains(v) {
            return Err(FrontendError::Undeclared(v.clone()));
        }
    }
    // Prefix: leading unlabelled assignments, when something follows them.
    let is_prefix = |s: &Stmt| s.label.is_empty() && matches!(s.kind, StmtKind::Assign(..) | StmtKind::Ndet(_));
    let k = stmts.iter().take_while(|s| is_prefix(s)).count();
    let k = if k == stmts.len() { 0 } else { k };
    let mut body = stmts;
    let prefix: Vec<Stmt> = body.drain(..k).collect();
    if body.is_empty() {
        body.push(Stmt { label: String::new(), kind: StmtKind::Skip });
    }
    let mut used = BTreeSet::new();
    used.insert(TERMINAL.to_string());
    assign_labels(&mut body, &mut 0, &mut used)?;
    Ok(ProgramAst { vars: p.seen_vars, prefix, body, terminal: TERMINAL.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "while x >= 9 do
  x := ndet();
  y := 10*x;
  while x <= y do
    x := x + 1
  od
od";

    #[test]
    fn running_example_labels() {
        let ast = parse_program(FIG1).unwrap();
        assert_eq!(ast.vars, vec!["x", "y"]);
        assert_eq!(ast.labels(), vec!["l0", "l1", "l2", "l3", "l4"]);
        assert!(ast.prefix.is_empty());
    }

    #[test]
    fn prefix_and_else_if_chain() {
        let src = "n := 0, b := 0, u := 0
while b == 0 and n <= 99 do
  u := ndet();
  if u <= -1 then b := -1
  else if u == 0 then b := 0
  else b := 1 fi;
  n := n + 1;
  if n >= 100 and b >= 1 then
    while true do skip od
  fi
od";
        let ast = parse_program(src).unwrap();
        assert_eq!(ast.prefix.len(), 3);
        assert_eq!(ast.labels(), (0..10).map(|i| format!("l{i}")).collect::<Vec<_>>());
        assert_eq!(ast.vars, vec!["n", "b", "u"]);
    }

    #[test]
    fn skip_program() {
        let ast = parse_program("skip").unwrap();
        assert_eq!(ast.labels(), vec!["l0"]);
    }

    #[test]
    fn division_is_rejected() {
        let e = parse_program("x := x / 2; skip").unwrap_err();
        assert!(matches!(e, FrontendError::NonPolynomial { line: 1, col: 8, .. }), "{e:?}");
        assert!(matches!(parse_program("x := x % 2; skip"), Err(FrontendError::NonPolynomial { .. })));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_program("while x >= do skip od").unwrap_err();
        assert!(matches!(e, FrontendError::Syntax { line: 1, col: 12, .. }), "{e:?}");
    }

    #[test]
    fn undeclared_variables() {
        assert_eq!(parse_program("while z >= 0 do skip od"), Err(FrontendError::Undeclared("z".into())));
        assert!(parse_program("var z\nwhile z >= 0 do skip od").is_ok());
    }

    #[test]
    fn parenthesised_conditions_and_operands() {
        let ast = parse_program("var x, y\nwhile (x + 1) * 2 >= y and (x >= 0 or not (y < 3)) do skip od").unwrap();
        let StmtKind::While(c, _) = &ast.body[0].kind else { panic!() };
        assert!(matches!(c, Cond::And(..)));
    }

    #[test]
    fn explicit_labels_and_duplicates() {
        let ast = parse_program("var x\nhead: while x >= 0 do\n  inc: x := x - 1 od").unwrap();
        assert_eq!(ast.labels(), vec!["head", "inc"]);
        assert_eq!(
            parse_program("var x\na: skip; a: skip"),
            Err(FrontendError::DuplicateLabel("a".into()))
        );
    }

    #[test]
    fn printed_program_reparses_identically() {
        let ast = parse_program(FIG1).unwrap();
        let again = parse_program(&ast.to_string()).unwrap();
        assert_eq!(ast, again);
    }
}
