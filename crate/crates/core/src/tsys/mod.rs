//! Transition systems over integer variables.
//!
//! Relations are assertions over `2n` variables: index `v` is the unprimed
//! copy of program variable `v` and `v + n` its primed copy.

mod format;
mod predicate;
mod semantics;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::poly::Poly;

pub use format::{parse_poly_sexp, parse_tsys, poly_to_sexp, tsys_from_sexp, tsys_to_sexp, write_tsys, FormatError};
pub(crate) use format::{atom_to_sexp, atom_usize, parse_atom};
pub(crate) use predicate::normalize_conjunction;
pub use predicate::{complement, complement_predicate, Assertion, Predicate, PredicateMap, DNF_CAP};
pub use semantics::{successors, Configuration, NdetBox, PrimedDef, StepPlan, Stepper};

pub type VarId = usize;
pub type LocId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TsysError {
    #[error("resolution is missing non-deterministic transition #{0}")]
    MissingResolution(usize),
    #[error("resolution mentions transition #{0}, which is not a non-deterministic assignment")]
    ExtraResolution(usize),
    #[error("complement exceeds {cap} disjuncts")]
    DnfTooLarge { cap: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: LocId,
    pub target: LocId,
    pub relation: Assertion,
    /// Set when this transition is a non-deterministic assignment to the variable.
    pub ndet_var: Option<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    pub vars: Vec<String>,
    pub locations: Vec<String>,
    pub init: LocId,
    pub terminal: LocId,
    pub theta_init: Assertion,
    pub transitions: Vec<Transition>,
}

/// Polynomial resolution of every non-deterministic assignment, keyed by
/// transition index. Polynomials range over unprimed variables.
pub type Resolution = BTreeMap<usize, Poly<VarId>>;

impl TransitionSystem {
    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_locs(&self) -> usize {
        self.locations.len()
    }

    pub fn primed(&self, v: VarId) -> VarId {
        v + self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn loc_index(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l == name)
    }

    pub fn ndet_transitions(&self) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&i| self.transitions[i].ndet_var.is_some())
            .collect()
    }

    pub fn outgoing(&self, loc: LocId) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.source == loc)
    }

    /// `⋀ v' = v` over all variables.
    pub fn frame(&self, except: Option<VarId>) -> Vec<Poly<VarId>> {
        let n = self.n_vars();
        let mut out = Vec::new();
        for v in 0..n {
            if Some(v) == except {
                continue;
            }
            let d = &Poly::var(v + n) - &Poly::var(v);
            out.push(-&d);
            out.push(d);
        }
        out
    }

    /// Reversal: every transition flipped with primed and unprimed copies
    /// swapped; the terminal location becomes initial with valuations `theta`.
    pub fn reverse(&self, theta: &Assertion) -> TransitionSystem {
        let n = self.n_vars();
        let swap = |v: &VarId| if *v < n { *v + n } else { *v - n };
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition {
                source: t.target,
                target: t.source,
                relation: Assertion::new(t.relation.conjuncts.iter().map(|p| p.map_vars(swap)).collect()),
                ndet_var: None,
            })
            .collect();
        TransitionSystem {
            vars: self.vars.clone(),
            locations: self.locations.clone(),
            init: self.terminal,
            terminal: self.terminal,
            theta_init: theta.clone(),
            transitions,
        }
    }

    /// Restricts each non-deterministic assignment `x := ndet()` to
    /// `x := r(τ)`. The resulting system has no non-deterministic transitions.
    pub fn restrict(&self, r: &Resolution) -> Result<TransitionSystem, TsysError> {
        let n = self.n_vars();
        for k in r.keys() {
            if self.transitions.get(*k).and_then(|t| t.ndet_var).is_none() {
                return Err(TsysError::ExtraResolution(*k));
            }
        }
        let mut out = self.clone();
        for (i, t) in out.transitions.iter_mut().enumerate() {
            let Some(x) = t.ndet_var else { continue };
            let e = r.get(&i).ok_or(TsysError::MissingResolution(i))?;
            // Keep any side conditions of the original relation that do not
            // mention x'; the lowered form carries only the frame.
            let mut conj: Vec<Poly<VarId>> = t
                .relation
                .conjuncts
                .iter()
                .filter(|p| !p.mentions(&(x + n)))
                .cloned()
                .collect();
            let d = &Poly::var(x + n) - e;
            conj.push(-&d);
            conj.push(d);
            t.relation = Assertion::new(conj);
            t.ndet_var = None;
        }
        Ok(out)
    }

    pub fn var_name(&self, v: VarId) -> String {
        let n = self.n_vars();
        if v < n {
            self.vars[v].clone()
        } else {
            format!("{}'", self.vars[v - n])
        }
    }

    pub fn show_poly(&self, p: &Poly<VarId>) -> String {
        p.display_with(|v| self.var_name(*v)).to_string()
    }

    pub fn show_assertion(&self, a: &Assertion) -> String {
        if a.conjuncts.is_empty() {
            return "true".into();
        }
        a.conjuncts
            .iter()
            .map(|p| format!("{} >= 0", self.show_poly(p)))
            .collect::<Vec<_>>()
            .join(" /\\ ")
    }

    pub fn show_predicate(&self, p: &Predicate) -> String {
        if p.disjuncts.is_empty() {
            return "false".into();
        }
        p.disjuncts
            .iter()
            .map(|a| format!("({})", self.show_assertion(a)))
            .collect::<Vec<_>>()
            .join(" \\/ ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    /// Two-variable system shaped like the running example's first edges.
    fn small() -> TransitionSystem {
        let x = Poly::var(0);
        let nine = Poly::constant(9);
        let mut ts = TransitionSystem {
            vars: vec!["x".into(), "y".into()],
            locations: vec!["l0".into(), "l1".into(), "l2".into(), "out".into()],
            init: 0,
            terminal: 3,
            theta_init: Assertion::top(),
            transitions: vec![],
        };
        let mut g = vec![&x - &nine];
        g.extend(ts.frame(None));
        ts.transitions.push(Transition { source: 0, target: 1, relation: Assertion::new(g), ndet_var: None });
        ts.transitions.push(Transition {
            source: 1,
            target: 2,
            relation: Assertion::new(ts.frame(Some(0))),
            ndet_var: Some(0),
        });
        ts.transitions.push(Transition { source: 3, target: 3, relation: Assertion::new(ts.frame(None)), ndet_var: None });
        ts
    }

    #[test]
    fn reversal_swaps_copies_and_is_an_involution() {
        let ts = small();
        let r = ts.reverse(&Assertion::top());
        assert_eq!(r.init, ts.terminal);
        assert_eq!(r.transitions[0].source, 1);
        assert_eq!(r.transitions[0].target, 0);
        // x >= 9 becomes x' >= 9
        assert_eq!(r.transitions[0].relation.conjuncts[0], &Poly::var(2) - &Poly::constant(9));
        let rr = r.reverse(&ts.theta_init);
        let rel: Vec<_> = rr.transitions.iter().map(|t| (t.source, t.target, t.relation.clone())).collect();
        let orig: Vec<_> = ts.transitions.iter().map(|t| (t.source, t.target, t.relation.clone())).collect();
        assert_eq!(rel, orig);
    }

    #[test]
    fn restriction_replaces_ndet_with_assignment() {
        let ts = small();
        let mut r = Resolution::new();
        r.insert(1, Poly::constant(9));
        let u = ts.restrict(&r).unwrap();
        assert!(u.ndet_transitions().is_empty());
        let vals = |x: i128, y: i128, xp: i128, yp: i128| vec![x, y, xp, yp];
        assert!(u.transitions[1].relation.eval(&vals(3, 4, 9, 4)));
        assert!(!u.transitions[1].relation.eval(&vals(3, 4, 8, 4)));
        assert!(!u.transitions[1].relation.eval(&vals(3, 4, 9, 5)));
    }

    #[test]
    fn restriction_to_identity_is_pure_frame() {
        let ts = small();
        let mut r = Resolution::new();
        r.insert(1, Poly::var(0));
        let u = ts.restrict(&r).unwrap();
        for (x, xp) in [(0i128, 0i128), (5, 5), (5, 6)] {
            assert_eq!(u.transitions[1].relation.eval(&[x, 1, xp, 1]), x == xp);
        }
    }

    #[test]
    fn restriction_requires_every_ndet_transition() {
        let ts = small();
        assert_eq!(ts.restrict(&Resolution::new()), Err(TsysError::MissingResolution(1)));
        let mut r = Resolution::new();
        r.insert(1, Poly::constant(BigInt::from(1)));
        r.insert(0, Poly::constant(BigInt::from(1)));
        assert_eq!(ts.restrict(&r), Err(TsysError::ExtraResolution(0)));
    }
}
