use std::collections::HashMap;

use super::{Cond, FrontendError, Guard, ProgramAst, Rel, Stmt, StmtKind};
use crate::poly::Poly;
use crate::tsys::{Assertion, LocId, Transition, TransitionSystem, VarId, DNF_CAP};

type Dnf = Vec<Vec<Poly<VarId>>>;

struct Lowerer<'a> {
    ts: TransitionSystem,
    var_ix: HashMap<&'a str, VarId>,
    loc_ix: HashMap<String, LocId>,
}

impl<'a> Lowerer<'a> {
    fn poly(&self, p: &Poly<String>) -> Poly<VarId> {
        p.map_vars(|v| self.var_ix[v.as_str()])
    }

    fn atom(&self, a: &Poly<String>, rel: Rel, b: &Poly<String>) -> Dnf {
        let (a, b) = (self.poly(a), self.poly(b));
        let one = Poly::one();
        match rel {
            Rel::Ge => vec![vec![&a - &b]],
            Rel::Le => vec![vec![&b - &a]],
            Rel::Gt => vec![vec![&(&a - &b) - &one]],
            Rel::Lt => vec![vec![&(&b - &a) - &one]],
            Rel::Eq => vec![vec![&a - &b, &b - &a]],
            Rel::Ne => vec![vec![&(&a - &b) - &one], vec![&(&b - &a) - &one]],
        }
    }

    /// DNF of `c` (or of `¬c` when `neg`), with integer tightening and
    /// interval pruning.
    fn dnf(&self, c: &Cond, neg: bool) -> Result<Dnf, FrontendError> {
        let out = match (c, neg) {
            (Cond::True, false) | (Cond::False, true) => vec![vec![]],
            (Cond::True, true) | (Cond::False, false) => vec![],
            (Cond::Cmp(a, r, b), false) => self.atom(a, *r, b),
            (Cond::Cmp(a, r, b), true) => {
                let r = match r {
                    Rel::Ge => Rel::Lt,
                    Rel::Le => Rel::Gt,
                    Rel::Gt => Rel::Le,
                    Rel::Lt => Rel::Ge,
                    Rel::Eq => Rel::Ne,
                    Rel::Ne => Rel::Eq,
                };
                self.atom(a, r, b)
            }
            (Cond::Not(c), n) => self.dnf(c, !n)?,
            (Cond::And(a, b), false) | (Cond::Or(a, b), true) => and(self.dnf(a, neg)?, self.dnf(b, neg)?)?,
            (Cond::Or(a, b), false) | (Cond::And(a, b), true) => {
                let mut l = self.dnf(a, neg)?;
                for d in self.dnf(b, neg)? {
                    if !l.contains(&d) {
                        l.push(d);
                    }
                }
                l
            }
        };
        let out: Dnf = out
            .into_iter()
            .filter_map(|c| crate::tsys::normalize_conjunction(&c))
            .collect();
        if out.len() > DNF_CAP {
            return Err(FrontendError::GuardTooLarge(DNF_CAP));
        }
        Ok(out)
    }

    fn push(&mut self, src: LocId, tgt: LocId, relation: Vec<Poly<VarId>>, ndet_var: Option<VarId>) {
        self.ts.transitions.push(Transition { source: src, target: tgt, relation: Assertion::new(relation), ndet_var });
    }

    fn guarded(&mut self, src: LocId, tgt: LocId, guard: &Dnf) {
        for g in guard {
            let mut rel = g.clone();
            rel.extend(self.ts.frame(None));
            self.push(src, tgt, rel, None);
        }
    }

    fn entry(&self, ss: &[Stmt], next: LocId) -> LocId {
        ss.first().map_or(next, |s| self.loc_ix[&s.label])
    }

    fn block(&mut self, ss: &[Stmt], next: LocId) -> Result<(), FrontendError> {
        for (i, s) in ss.iter().enumerate() {
            let after = ss.get(i + 1).map_or(next, |t| self.loc_ix[&t.label]);
            self.stmt(s, after)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, next: LocId) -> Result<(), FrontendError> {
        let n = self.ts.n_vars();
        let l = self.loc_ix[&s.label];
        match &s.kind {
            StmtKind::Skip => {
                let rel = self.ts.frame(None);
                self.push(l, next, rel, None);
            }
            StmtKind::Assign(x, e) => {
                let x = self.var_ix[x.as_str()];
                let d = &Poly::var(x + n) - &self.poly(e);
                let mut rel = vec![d.clone(), -&d];
                rel.extend(self.ts.frame(Some(x)));
                self.push(l, next, rel, None);
            }
            StmtKind::Ndet(x) => {
                let x = self.var_ix[x.as_str()];
                let rel = self.ts.frame(Some(x));
                self.push(l, next, rel, Some(x));
            }
            StmtKind::While(c, body) => {
                let enter = self.entry(body, l);
                let g = self.dnf(c, false)?;
                self.guarded(l, enter, &g);
                let g = self.dnf(c, true)?;
                self.guarded(l, next, &g);
                self.block(body, l)?;
            }
            StmtKind::If(arms, els) => {
                let mut prev: Option<Cond> = None;
                for (g, body) in arms {
                    let Guard::Cond(c) = g else { return Err(FrontendError::NondetBranching) };
                    let full = match &prev {
                        None => c.clone(),
                        Some(p) => Cond::And(Box::new(Cond::Not(Box::new(p.clone()))), Box::new(c.clone())),
                    };
                    let g = self.dnf(&full, false)?;
                    let tgt = self.entry(body, next);
                    self.guarded(l, tgt, &g);
                    prev = Some(match prev {
                        None => c.clone(),
                        Some(p) => Cond::Or(Box::new(p), Box::new(c.clone())),
                    });
                }
                let rest = self.dnf(prev.as_ref().unwrap(), true)?;
                let tgt = els.as_ref().map_or(next, |e| self.entry(e, next));
                self.guarded(l, tgt, &rest);
                for (_, body) in arms {
                    self.block(body, next)?;
                }
                if let Some(e) = els {
                    self.block(e, next)?;
                }
            }
        }
        Ok(())
    }
}

fn and(a: Dnf, b: Dnf) -> Result<Dnf, FrontendError> {
    let mut out: Dnf = Vec::new();
    for x in &a {
        for y in &b {
            let mut c = x.clone();
            c.extend(y.iter().cloned());
            if let Some(c) = crate::tsys::normalize_conjunction(&c) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            if out.len() > DNF_CAP {
                return Err(FrontendError::GuardTooLarge(DNF_CAP));
            }
        }
    }
    Ok(out)
}

/// Initial valuations from the assignment prefix. Variables assigned by
/// `ndet()` or never assigned stay unconstrained.
fn theta(ast: &ProgramAst, var_ix: &HashMap<&str, VarId>) -> Result<Assertion, FrontendError> {
    let mut state: HashMap<&str, Option<Poly<String>>> = HashMap::new();
    for s in &ast.prefix {
        match &s.kind {
            StmtKind::Assign(x, e) => {
                let v = e.substitute(&mut |w: &String| match state.get(w.as_str()) {
                    Some(Some(p)) => p.clone(),
                    _ => Poly::var(w.clone()),
                });
                state.insert(x.as_str(), Some(v));
            }
            StmtKind::Ndet(x) => {
                state.insert(x.as_str(), None);
            }
            _ => unreachable!("prefix holds assignments only"),
        }
    }
    let mut conj = Vec::new();
    for v in &ast.vars {
        let Some(Some(p)) = state.get(v.as_str()) else { continue };
        // The value must not refer to an initial value that the prefix overwrote.
        if p.vars().iter().any(|w| state.contains_key(w.as_str())) {
            return Err(FrontendError::PrefixDependency(v.clone()));
        }
        let p = p.map_vars(|w| var_ix[w.as_str()]);
        let d = &Poly::var(var_ix[v.as_str()]) - &p;
        conj.push(d.clone());
        conj.push(-&d);
    }
    Ok(Assertion::new(conj))
}

/// Builds the transition system of a program without `if *`.
pub fn lower(ast: &ProgramAst) -> Result<TransitionSystem, FrontendError> {
    let mut locations = ast.labels();
    locations.push(ast.terminal.clone());
    let loc_ix: HashMap<String, LocId> = locations.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let var_ix: HashMap<&str, VarId> = ast.vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let terminal = locations.len() - 1;
    let ts = TransitionSystem {
        vars: ast.vars.clone(),
        locations,
        init: 0,
        terminal,
        theta_init: theta(ast, &var_ix)?,
        transitions: Vec::new(),
    };
    let mut lw = Lowerer { ts, var_ix, loc_ix };
    lw.block(&ast.body, terminal)?;
    let frame = lw.ts.frame(None);
    lw.push(terminal, terminal, frame, None);
    Ok(lw.ts)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_program, remove_nondet_branching};
    use super::*;
    use crate::tsys::{parse_tsys, write_tsys, Configuration, NdetBox, Stepper};

    const FIG1: &str = "while x >= 9 do\n x := ndet();\n y := 10*x;\n while x <= y do x := x + 1 od\nod";

    #[test]
    fn running_example_shape() {
        let ts = lower(&parse_program(FIG1).unwrap()).unwrap();
        assert_eq!(ts.locations, vec!["l0", "l1", "l2", "l3", "l4", "out"]);
        assert_eq!(ts.ndet_transitions().len(), 1);
        let t = &ts.transitions[0];
        assert_eq!((t.source, t.target), (0, 1));
        // x >= 9 ∧ x' = x ∧ y' = y
        for (x, y, xp, yp, ok) in [(9, 0, 9, 0, true), (8, 0, 8, 0, false), (9, 0, 9, 1, false)] {
            assert_eq!(t.relation.eval(&[x, y, xp, yp]), ok);
        }
        assert!(ts.theta_init.conjuncts.is_empty());
    }

    #[test]
    fn fig1_successors() {
        let ts = lower(&parse_program(FIG1).unwrap()).unwrap();
        let st = Stepper::new(&ts);
        let succ = |loc, vals: Vec<i128>, b| {
            let mut v: Vec<_> = st.successors(&ts, &Configuration { loc, vals }, b).into_iter().map(|(_, c)| c).collect();
            v.sort();
            v
        };
        assert_eq!(succ(0, vec![9, 0], NdetBox::new(-1, 1)), vec![Configuration { loc: 1, vals: vec![9, 0] }]);
        assert_eq!(
            succ(1, vec![9, 0], NdetBox::new(-1, 1)),
            (-1..=1).map(|x| Configuration { loc: 2, vals: vec![x, 0] }).collect::<Vec<_>>()
        );
        assert_eq!(succ(5, vec![3, 4], NdetBox::new(-1, 1)), vec![Configuration { loc: 5, vals: vec![3, 4] }]);
    }

    #[test]
    fn skip_program() {
        let ts = lower(&parse_program("skip").unwrap()).unwrap();
        assert_eq!(ts.n_locs(), 2);
        assert_eq!(ts.transitions.len(), 2);
    }

    #[test]
    fn prefix_gives_theta_and_ndet_set() {
        let src = "n := 0, b := 0, u := 0
while b == 0 and n <= 99 do
  u := ndet();
  if u <= -1 then b := -1 else if u == 0 then b := 0 else b := 1 fi;
  n := n + 1;
  if n >= 100 and b >= 1 then while true do skip od fi
od";
        let ts = lower(&parse_program(src).unwrap()).unwrap();
        assert!(ts.theta_init.eval(&[0, 0, 0]));
        assert!(!ts.theta_init.eval(&[0, 1, 0]));
        let nd = ts.ndet_transitions();
        assert_eq!(nd.len(), 1);
        assert_eq!(ts.locations[ts.transitions[nd[0]].source], "l1");
        assert_eq!(ts.locations[ts.transitions[nd[0]].target], "l2");
    }

    #[test]
    fn prefix_dependency_is_rejected() {
        let e = lower(&parse_program("var x, y\nx := y; y := 1; skip").unwrap()).unwrap_err();
        assert_eq!(e, FrontendError::PrefixDependency("x".into()));
        let ts = lower(&parse_program("var x, y\nx := y + 1; skip").unwrap()).unwrap();
        assert!(ts.theta_init.eval(&[4, 3]));
    }

    #[test]
    fn ndet_prefix_leaves_variable_free() {
        let ts = lower(&parse_program("var x, y\nx := ndet(); y := 2; skip").unwrap()).unwrap();
        assert!(ts.theta_init.eval(&[-7, 2]));
        assert!(!ts.theta_init.eval(&[-7, 3]));
    }

    #[test]
    fn disjunctive_guards_split() {
        let ts = lower(&parse_program("var x\nwhile x != 0 do x := x - 1 od").unwrap()).unwrap();
        let from_head = ts.transitions.iter().filter(|t| t.source == 0).count();
        assert_eq!(from_head, 3);
    }

    #[test]
    fn branching_is_total_on_a_box() {
        let src = "var x, y\nif * then x := 1 else if x * y >= 2 or x < -1 then y := x^2 else skip fi";
        let ts = lower(&remove_nondet_branching(&parse_program(src).unwrap())).unwrap();
        let st = Stepper::new(&ts);
        for loc in 0..ts.n_locs() {
            for x in -4..=4 {
                for y in -4..=4 {
                    let c = Configuration { loc, vals: vec![x, y, 0] };
                    assert!(!st.successors(&ts, &c, NdetBox::new(-1, 1)).is_empty(), "{c:?}");
                }
            }
        }
    }

    #[test]
    fn interchange_round_trip() {
        let ts = lower(&parse_program(FIG1).unwrap()).unwrap();
        assert_eq!(parse_tsys(&write_tsys(&ts)).unwrap(), ts);
    }

    #[test]
    fn unresolved_star_is_an_error() {
        let ast = parse_program("var x\nif * then skip fi").unwrap();
        assert_eq!(lower(&ast), Err(FrontendError::NondetBranching));
    }
}
