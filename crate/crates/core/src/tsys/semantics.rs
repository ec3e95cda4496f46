//! Step semantics of a single transition relation.
//!
//! A relation is turned into a [`StepPlan`]: primed variables that are
//! pinned by an equality `c*x' + q = 0` with unit `c` get an explicit
//! definition, everything else is left free and constrained by guards.
//! The plan drives concrete successor enumeration and symbolic execution.

use num_traits::{One, Signed};

use super::{Assertion, LocId, TransitionSystem, VarId};
use crate::poly::{CompiledPoly, Poly};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub loc: LocId,
    pub vals: Vec<i128>,
}

/// Inclusive range used for values of free primed variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NdetBox {
    pub lo: i128,
    pub hi: i128,
}

impl NdetBox {
    pub fn new(lo: i128, hi: i128) -> Self {
        NdetBox { lo, hi }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimedDef {
    /// Polynomial over unprimed variables and earlier-defined primed ones.
    Expr(Poly<VarId>),
    Free,
}

#[derive(Clone, Debug)]
pub struct StepPlan {
    pub n: usize,
    /// `(v, def)` for each program variable `v`, in resolution order.
    pub defs: Vec<(VarId, PrimedDef)>,
    /// Conjuncts not consumed as definitions; range over all `2n` variables.
    pub guards: Vec<Poly<VarId>>,
    compiled_defs: Vec<Option<CompiledPoly>>,
    compiled_guards: Vec<CompiledPoly>,
}

impl StepPlan {
    pub fn new(rel: &Assertion, n: usize) -> StepPlan {
        let cs = &rel.conjuncts;
        // Equality pairs (p, -p).
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut paired = vec![false; cs.len()];
        for i in 0..cs.len() {
            if paired[i] {
                continue;
            }
            let neg = -&cs[i];
            if let Some(j) = (i + 1..cs.len()).find(|&j| !paired[j] && cs[j] == neg) {
                paired[i] = true;
                paired[j] = true;
                pairs.push((i, j));
            }
        }
        let mut used = vec![false; pairs.len()];
        let mut solved = vec![false; n];
        let mut defs = Vec::new();
        loop {
            let mut progress = false;
            for v in 0..n {
                if solved[v] {
                    continue;
                }
                for (k, &(i, _)) in pairs.iter().enumerate() {
                    if used[k] {
                        continue;
                    }
                    let p = &cs[i];
                    let Some(c) = p.linear_coeff_isolated(&(v + n)) else { continue };
                    if c.abs() != One::one() {
                        continue;
                    }
                    let others_ok = p
                        .vars()
                        .iter()
                        .all(|w| *w < n || *w == v + n || solved[*w - n]);
                    if !others_ok {
                        continue;
                    }
                    // p = c*v' + q = 0  =>  v' = -c*q
                    let q = p - &(&Poly::var(v + n) * &Poly::constant(c.clone()));
                    let def = (-&q).scale(&c);
                    defs.push((v, PrimedDef::Expr(def)));
                    used[k] = true;
                    solved[v] = true;
                    progress = true;
                    break;
                }
            }
            if !progress {
                break;
            }
        }
        for (v, s) in solved.iter().enumerate() {
            if !s {
                defs.push((v, PrimedDef::Free));
            }
        }
        let mut consumed = vec![false; cs.len()];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if used[k] {
                consumed[i] = true;
                consumed[j] = true;
            }
        }
        let guards: Vec<Poly<VarId>> = cs
            .iter()
            .enumerate()
            .filter(|(i, _)| !consumed[*i])
            .map(|(_, p)| p.clone())
            .collect();
        let compiled_defs = defs
            .iter()
            .map(|(_, d)| match d {
                PrimedDef::Expr(e) => Some(CompiledPoly::new(e)),
                PrimedDef::Free => None,
            })
            .collect();
        let compiled_guards = guards.iter().map(CompiledPoly::new).collect();
        StepPlan { n, defs, guards, compiled_defs, compiled_guards }
    }

    pub fn free_vars(&self) -> Vec<VarId> {
        self.defs
            .iter()
            .filter(|(_, d)| *d == PrimedDef::Free)
            .map(|(v, _)| *v)
            .collect()
    }

    /// All post-states of `x` with free variables drawn from `bx`.
    pub fn post(&self, x: &[i128], bx: NdetBox) -> Vec<Vec<i128>> {
        let n = self.n;
        let mut full = vec![0i128; 2 * n];
        full[..n].copy_from_slice(x);
        let mut free = Vec::new();
        for ((v, _), cd) in self.defs.iter().zip(&self.compiled_defs) {
            match cd {
                Some(e) => match e.eval(&full) {
                    Some(val) => full[v + n] = val,
                    None => return Vec::new(),
                },
                None => free.push(*v),
            }
        }
        let mut out = Vec::new();
        self.enumerate_free(&mut full, &free, 0, bx, &mut out);
        out
    }

    fn enumerate_free(&self, full: &mut Vec<i128>, free: &[VarId], k: usize, bx: NdetBox, out: &mut Vec<Vec<i128>>) {
        let n = self.n;
        if k == free.len() {
            if self.compiled_guards.iter().all(|g| g.nonneg(full)) {
                out.push(full[n..].to_vec());
            }
            return;
        }
        for val in bx.lo..=bx.hi {
            full[free[k] + n] = val;
            self.enumerate_free(full, free, k + 1, bx, out);
        }
    }

    /// Symbolic image of `state` (one polynomial per program variable).
    /// Returns the post-state and the guards instantiated on both sides.
    pub fn apply<S: Ord + Clone>(
        &self,
        state: &[Poly<S>],
        fresh: &mut impl FnMut(VarId) -> Poly<S>,
    ) -> (Vec<Poly<S>>, Vec<Poly<S>>) {
        let n = self.n;
        let mut post: Vec<Option<Poly<S>>> = vec![None; n];
        for (v, d) in &self.defs {
            let p = match d {
                PrimedDef::Expr(e) => e.substitute(&mut |w: &VarId| {
                    if *w < n {
                        state[*w].clone()
                    } else {
                        post[*w - n].clone().expect("definition order")
                    }
                }),
                PrimedDef::Free => fresh(*v),
            };
            post[*v] = Some(p);
        }
        let post: Vec<Poly<S>> = post.into_iter().map(|p| p.expect("all vars defined")).collect();
        let guards = self
            .guards
            .iter()
            .map(|g| g.substitute(&mut |w: &VarId| if *w < n { state[*w].clone() } else { post[*w - n].clone() }))
            .collect();
        (post, guards)
    }
}

/// Precomputed step plans for every transition of a system.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub plans: Vec<StepPlan>,
}

impl Stepper {
    pub fn new(ts: &TransitionSystem) -> Self {
        let n = ts.n_vars();
        Stepper { plans: ts.transitions.iter().map(|t| StepPlan::new(&t.relation, n)).collect() }
    }

    /// Successors of `c` as `(transition index, configuration)`.
    pub fn successors(&self, ts: &TransitionSystem, c: &Configuration, bx: NdetBox) -> Vec<(usize, Configuration)> {
        let mut out = Vec::new();
        for (i, t) in ts.outgoing(c.loc) {
            for vals in self.plans[i].post(&c.vals, bx) {
                out.push((i, Configuration { loc: t.target, vals }));
            }
        }
        out
    }
}

pub fn successors(ts: &TransitionSystem, c: &Configuration, bx: NdetBox) -> Vec<(usize, Configuration)> {
    Stepper::new(ts).successors(ts, c, bx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increment_is_solved_forwards_and_backwards() {
        // x' = x + 1
        let d = &(&Poly::var(1) - &Poly::var(0)) - &Poly::one();
        let rel = Assertion::new(vec![d.clone(), -&d]);
        let plan = StepPlan::new(&rel, 1);
        assert!(plan.guards.is_empty());
        assert_eq!(plan.post(&[4], NdetBox::new(0, 0)), vec![vec![5]]);
        let rev = Assertion::new(rel.conjuncts.iter().map(|p| p.map_vars(|v| 1 - v)).collect());
        let plan = StepPlan::new(&rev, 1);
        assert_eq!(plan.post(&[4], NdetBox::new(0, 0)), vec![vec![3]]);
    }

    #[test]
    fn non_unit_definition_falls_back_to_free_with_guard() {
        // x = 10 x'  (reversal of x := 10x)
        let d = &Poly::var(0) - &(&Poly::constant(10) * &Poly::var(1));
        let plan = StepPlan::new(&Assertion::new(vec![d.clone(), -&d]), 1);
        assert_eq!(plan.free_vars(), vec![0]);
        assert_eq!(plan.post(&[30], NdetBox::new(-5, 5)), vec![vec![3]]);
        assert!(plan.post(&[31], NdetBox::new(-5, 5)).is_empty());
    }

    #[test]
    fn symbolic_application_composes() {
        // (x, y)' = (x + y, y)
        let n = 2;
        let d0 = &Poly::var(2) - &(&Poly::var(0) + &Poly::var(1));
        let d1 = &Poly::var(3) - &Poly::var(1);
        let g = &Poly::var(0) - &Poly::constant(1);
        let plan = StepPlan::new(&Assertion::new(vec![g, d0.clone(), -&d0, d1.clone(), -&d1]), n);
        let state: Vec<Poly<&str>> = vec![Poly::var("a"), Poly::var("b")];
        let (post, guards) = plan.apply(&state, &mut |_| unreachable!());
        assert_eq!(post[0], &Poly::var("a") + &Poly::var("b"));
        assert_eq!(guards, vec![&Poly::var("a") - &Poly::constant(1)]);
    }
}
