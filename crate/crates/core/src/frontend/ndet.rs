use super::{Cond, Guard, ProgramAst, Rel, Stmt, StmtKind};
use crate::poly::Poly;

struct Fresh {
    next: usize,
    vars: Vec<String>,
}

impl Fresh {
    fn var(&mut self) -> String {
        loop {
            let v = format!("__ndet_{}", self.next);
            self.next += 1;
            if !self.vars.contains(&v) {
                self.vars.push(v.clone());
                return v;
            }
        }
    }
}

/// Replaces every `if *` by a fresh non-deterministic assignment followed by
/// a test on the fresh variable. The assignment keeps the `if`'s label and
/// the test gets `<label>_br`. A `*` arm in the middle of an `else if` chain
/// splits the chain: the remaining arms move into a nested `if` labelled
/// `<label>_<k>`.
pub fn remove_nondet_branching(ast: &ProgramAst) -> ProgramAst {
    let mut fresh = Fresh { next: 0, vars: ast.vars.clone() };
    let body = block(&ast.body, &mut fresh);
    ProgramAst { vars: fresh.vars, prefix: ast.prefix.clone(), body, terminal: ast.terminal.clone() }
}

fn block(ss: &[Stmt], fresh: &mut Fresh) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in ss {
        stmt(s, fresh, &mut out);
    }
    out
}

fn stmt(s: &Stmt, fresh: &mut Fresh, out: &mut Vec<Stmt>) {
    match &s.kind {
        StmtKind::While(c, b) => out.push(Stmt { label: s.label.clone(), kind: StmtKind::While(c.clone(), block(b, fresh)) }),
        StmtKind::If(arms, els) => if_chain(&s.label, arms, els.as_deref(), fresh, out),
        _ => out.push(s.clone()),
    }
}

fn if_chain(label: &str, arms: &[(Guard, Vec<Stmt>)], els: Option<&[Stmt]>, fresh: &mut Fresh, out: &mut Vec<Stmt>) {
    // Outer sites get lower fresh indices.
    let v = (arms[0].0 == Guard::Star).then(|| fresh.var());
    // Split at the first starred arm after position 0.
    let split = arms.iter().skip(1).position(|(g, _)| *g == Guard::Star).map(|k| k + 1);
    let (arms, nested_els) = match split {
        Some(k) => {
            let mut nested = Vec::new();
            let mut head = arms[..k].to_vec();
            head.iter_mut().for_each(|(_, b)| *b = block(b, fresh));
            if_chain(&format!("{label}_{k}"), &arms[k..], els, fresh, &mut nested);
            (head, Some(nested))
        }
        None => {
            let head = arms.iter().map(|(g, b)| (g.clone(), block(b, fresh))).collect();
            (head, els.map(|e| block(e, fresh)))
        }
    };
    let mut arms = arms;
    match v {
        Some(v) => {
            out.push(Stmt { label: label.to_string(), kind: StmtKind::Ndet(v.clone()) });
            arms[0].0 = Guard::Cond(Cond::Cmp(Poly::var(v), Rel::Ge, Poly::zero()));
            out.push(Stmt { label: format!("{label}_br"), kind: StmtKind::If(arms, nested_els) });
        }
        None => out.push(Stmt { label: label.to_string(), kind: StmtKind::If(arms, nested_els) }),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn ndets(ast: &ProgramAst) -> usize {
        ast.count(&|s| matches!(s.kind, StmtKind::Ndet(_)))
    }

    fn stars(ast: &ProgramAst) -> usize {
        ast.count(&|s| match &s.kind {
            StmtKind::If(arms, _) => arms.iter().filter(|(g, _)| *g == Guard::Star).count(),
            _ => 0,
        } > 0)
    }

    #[test]
    fn single_site() {
        let ast = parse_program("var x\nif * then x := 1 else x := 2 fi").unwrap();
        let out = remove_nondet_branching(&ast);
        assert_eq!(out.vars, vec!["x", "__ndet_0"]);
        assert_eq!(out.labels(), vec!["l0", "l0_br", "l1", "l2"]);
        assert_eq!(out.body[0].kind, StmtKind::Ndet("__ndet_0".into()));
        assert_eq!(out.body[1].label, "l0_br");
    }

    #[test]
    fn deterministic_program_is_unchanged() {
        let ast = parse_program("var x\nwhile x >= 0 do if x == 3 then skip fi; x := x - 1 od").unwrap();
        assert_eq!(remove_nondet_branching(&ast), ast);
    }

    #[test]
    fn nested_sites_reparse_with_one_ndet_each() {
        let src = "var x\nwhile x >= 0 do\n if * then\n  if * then x := x - 1 else skip fi\n else x := x - 2 fi\nod";
        let ast = parse_program(src).unwrap();
        assert_eq!(stars(&ast), 2);
        let out = remove_nondet_branching(&ast);
        let again = parse_program(&out.to_string()).unwrap();
        assert_eq!(ndets(&again), 2);
        assert_eq!(stars(&again), 0);
        assert_eq!(again, out);
    }

    #[test]
    fn star_inside_chain_splits() {
        let src = "var b\nl12: if * then b := -1 else if * then b := 0 else b := 1 fi";
        let out = remove_nondet_branching(&parse_program(src).unwrap());
        let labels = out.labels();
        assert_eq!(labels[..2], ["l12".to_string(), "l12_br".to_string()]);
        assert!(labels.contains(&"l12_1".to_string()));
        assert!(labels.contains(&"l12_1_br".to_string()));
        assert_eq!(ndets(&out), 2);
        assert_eq!(stars(&out), 0);
        assert_eq!(out.body[0].kind, StmtKind::Ndet("__ndet_0".into()));
    }
}
