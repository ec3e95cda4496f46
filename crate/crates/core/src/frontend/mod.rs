//! Surface language: parsing, removal of non-deterministic branching and
//! lowering to transition systems.
//!
//! ```text
//! var x, y                      # optional declaration line
//! n := 0, b := 0                # initial-assignment prefix
//! while x >= 9 do
//!   x := ndet();
//!   lbl: if * then skip else if x == 0 then skip else y := x^2 - 1 fi
//! od
//! ```
//!
//! Statements are separated by `;`, `,` or newlines. `#` and `//` start
//! comments. Statements without an explicit `name:` label are labelled
//! `l0`, `l1`, ... in pre-order; `else if` arms share the label of their `if`.

mod lower;
mod ndet;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::poly::Poly;

pub use lower::lower;
pub use ndet::remove_nondet_branching;
pub use parse::parse_program;

pub const TERMINAL: &str = "out";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: `{op}` is not a polynomial operation")]
    NonPolynomial { line: usize, col: usize, op: String },
    #[error("variable `{0}` is never assigned and not declared")]
    Undeclared(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("initial assignment to `{0}` depends on a variable the prefix overwrites")]
    PrefixDependency(String),
    #[error("guard expands to more than {0} disjuncts")]
    GuardTooLarge(usize),
    #[error("program still contains `if *`; remove non-deterministic branching first")]
    NondetBranching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    True,
    False,
    Cmp(Poly<String>, Rel, Poly<String>),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    /// `if *`
    Star,
    Cond(Cond),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Skip,
    Assign(String, Poly<String>),
    Ndet(String),
    While(Cond, Vec<Stmt>),
    /// `if g1 then .. else if g2 then .. else .. fi`
    If(Vec<(Guard, Vec<Stmt>)>, Option<Vec<Stmt>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub label: String,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramAst {
    pub vars: Vec<String>,
    /// Leading assignments defining the initial valuations; unlabelled.
    pub prefix: Vec<Stmt>,
    pub body: Vec<Stmt>,
    pub terminal: String,
}

impl ProgramAst {
    /// Labels of all body statements in pre-order.
    pub fn labels(&self) -> Vec<String> {
        fn walk(ss: &[Stmt], out: &mut Vec<String>) {
            for s in ss {
                out.push(s.label.clone());
                match &s.kind {
                    StmtKind::While(_, b) => walk(b, out),
                    StmtKind::If(arms, els) => {
                        for (_, b) in arms {
                            walk(b, out);
                        }
                        if let Some(e) = els {
                            walk(e, out);
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    /// Counts statements matching `pred` anywhere in the body.
    pub fn count(&self, pred: &impl Fn(&Stmt) -> bool) -> usize {
        fn walk(ss: &[Stmt], pred: &impl Fn(&Stmt) -> bool) -> usize {
            ss.iter()
                .map(|s| {
                    usize::from(pred(s))
                        + match &s.kind {
                            StmtKind::While(_, b) => walk(b, pred),
                            StmtKind::If(arms, els) => {
                                arms.iter().map(|(_, b)| walk(b, pred)).sum::<usize>()
                                    + els.as_ref().map_or(0, |e| walk(e, pred))
                            }
                            _ => 0,
                        }
                })
                .sum()
        }
        walk(&self.body, pred)
    }
}

fn show_poly(p: &Poly<String>) -> String {
    p.display_with(|v: &String| v.clone()).to_string()
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rel::Ge => ">=",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Lt => "<",
            Rel::Eq => "==",
            Rel::Ne => "!=",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::True => write!(f, "true"),
            Cond::False => write!(f, "false"),
            Cond::Cmp(a, r, b) => write!(f, "{} {} {}", show_poly(a), r, show_poly(b)),
            Cond::Not(c) => write!(f, "not ({})", c),
            Cond::And(a, b) => write!(f, "({}) and ({})", a, b),
            Cond::Or(a, b) => write!(f, "({}) or ({})", a, b),
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, ss: &[Stmt], indent: usize) -> fmt::Result {
    for (i, s) in ss.iter().enumerate() {
        write_stmt(f, s, indent)?;
        if i + 1 < ss.len() {
            writeln!(f, ";")?;
        } else {
            writeln!(f)?;
        }
    }
    Ok(())
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    write!(f, "{pad}")?;
    if !s.label.is_empty() {
        write!(f, "{}: ", s.label)?;
    }
    match &s.kind {
        StmtKind::Skip => write!(f, "skip"),
        StmtKind::Assign(x, e) => write!(f, "{} := {}", x, show_poly(e)),
        StmtKind::Ndet(x) => write!(f, "{} := ndet()", x),
        StmtKind::While(c, b) => {
            writeln!(f, "while {} do", c)?;
            write_block(f, b, indent + 1)?;
            write!(f, "{pad}od")
        }
        StmtKind::If(arms, els) => {
            for (i, (g, b)) in arms.iter().enumerate() {
                if i > 0 {
                    write!(f, "{pad}else ")?;
                }
                match g {
                    Guard::Star => writeln!(f, "if * then")?,
                    Guard::Cond(c) => writeln!(f, "if {} then", c)?,
                }
                write_block(f, b, indent + 1)?;
            }
            if let Some(e) = els {
                writeln!(f, "{pad}else")?;
                write_block(f, e, indent + 1)?;
            }
            write!(f, "{pad}fi")
        }
    }
}

/// Prints the program back in surface syntax with every label explicit.
impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "var {}", self.vars.join(", "))?;
        for s in &self.prefix {
            write_stmt(f, s, 0)?;
            writeln!(f)?;
        }
        write_block(f, &self.body, 0)
    }
}
