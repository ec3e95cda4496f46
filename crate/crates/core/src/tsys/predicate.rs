//! Assertions, propositional predicates and predicate maps.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use super::{LocId, TsysError, VarId};
use crate::poly::{Monomial, Poly};

/// Upper bound on the number of disjuncts produced by complementation.
pub const DNF_CAP: usize = 64;

/// Conjunction of polynomial inequalities `p >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct Assertion {
    pub conjuncts: Vec<Poly<VarId>>,
}

/// Disjunction of assertions. No disjuncts means `false`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Predicate {
    pub disjuncts: Vec<Assertion>,
}

/// One predicate per location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateMap {
    pub preds: Vec<Predicate>,
}

fn nonneg(p: &Poly<VarId>, vals: &[i128]) -> bool {
    match p.eval_i128(|v| vals[*v]) {
        Some(x) => x >= 0,
        None => !p.eval_big(|v| BigInt::from(vals[*v])).is_negative(),
    }
}

impl Assertion {
    pub fn new(conjuncts: Vec<Poly<VarId>>) -> Self {
        Assertion { conjuncts }
    }

    pub fn top() -> Self {
        Assertion::default()
    }

    pub fn bottom() -> Self {
        Assertion::new(vec![Poly::constant(-1)])
    }

    pub fn eval(&self, vals: &[i128]) -> bool {
        self.conjuncts.iter().all(|p| nonneg(p, vals))
    }

    pub fn and(&self, other: &Assertion) -> Assertion {
        let mut c = self.conjuncts.clone();
        c.extend(other.conjuncts.iter().cloned());
        Assertion::new(c)
    }

    pub fn is_trivially_false(&self) -> bool {
        self.conjuncts.iter().any(|p| p.is_negative_constant())
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.conjuncts.iter().flat_map(|p| p.vars()).max()
    }
}

impl Predicate {
    pub fn new(disjuncts: Vec<Assertion>) -> Self {
        Predicate { disjuncts }
    }

    pub fn top() -> Self {
        Predicate::new(vec![Assertion::top()])
    }

    pub fn bottom() -> Self {
        Predicate::new(Vec::new())
    }

    pub fn single(a: Assertion) -> Self {
        Predicate::new(vec![a])
    }

    pub fn eval(&self, vals: &[i128]) -> bool {
        self.disjuncts.iter().any(|a| a.eval(vals))
    }

    pub fn is_bottom(&self) -> bool {
        self.disjuncts.iter().all(|a| a.is_trivially_false())
    }
}

impl PredicateMap {
    pub fn uniform(n_locs: usize, p: Predicate) -> Self {
        PredicateMap { preds: vec![p; n_locs] }
    }

    pub fn get(&self, loc: LocId) -> &Predicate {
        &self.preds[loc]
    }

    pub fn set(&mut self, loc: LocId, p: Predicate) {
        self.preds[loc] = p;
    }

    pub fn eval(&self, loc: LocId, vals: &[i128]) -> bool {
        self.preds[loc].eval(vals)
    }
}

/// Bound implied by a single-variable linear conjunct `a*v + b >= 0`.
enum Bound {
    Lo(VarId, BigInt),
    Hi(VarId, BigInt),
}

fn as_bound(p: &Poly<VarId>) -> Option<Bound> {
    let vars = p.vars();
    if vars.len() != 1 || p.degree() != 1 {
        return None;
    }
    let v = *vars.iter().next().unwrap();
    let a = p.coeff(&Monomial::var(v));
    let b = p.constant_term();
    if a.is_positive() {
        // v >= ceil(-b / a)
        Some(Bound::Lo(v, (-b).div_ceil(&a)))
    } else {
        // v <= floor(b / -a)
        Some(Bound::Hi(v, b.div_floor(&(-a))))
    }
}

/// Tightens single-variable bounds and detects interval conflicts.
/// Returns `None` if the conjunction is unsatisfiable by interval reasoning.
pub(crate) fn normalize_conjunction(conj: &[Poly<VarId>]) -> Option<Vec<Poly<VarId>>> {
    let mut lo: BTreeMap<VarId, BigInt> = BTreeMap::new();
    let mut hi: BTreeMap<VarId, BigInt> = BTreeMap::new();
    let mut rest: Vec<Poly<VarId>> = Vec::new();
    for p in conj {
        if let Some(c) = p.as_constant() {
            if c.is_negative() {
                return None;
            }
            continue;
        }
        match as_bound(p) {
            Some(Bound::Lo(v, b)) => {
                let e = lo.entry(v).or_insert_with(|| b.clone());
                if b > *e {
                    *e = b;
                }
            }
            Some(Bound::Hi(v, b)) => {
                let e = hi.entry(v).or_insert_with(|| b.clone());
                if b < *e {
                    *e = b;
                }
            }
            None => {
                if !rest.contains(p) {
                    rest.push(p.clone());
                }
            }
        }
    }
    let mut out = Vec::new();
    let vars: std::collections::BTreeSet<VarId> = lo.keys().chain(hi.keys()).copied().collect();
    for v in vars {
        if let (Some(l), Some(h)) = (lo.get(&v), hi.get(&v)) {
            if l > h {
                return None;
            }
        }
        if let Some(l) = lo.get(&v) {
            out.push(&Poly::var(v) - &Poly::constant(l.clone()));
        }
        if let Some(h) = hi.get(&v) {
            out.push(&Poly::constant(h.clone()) - &Poly::var(v));
        }
    }
    out.extend(rest);
    Some(out)
}

/// Integer complement of a predicate, in disjunctive normal form.
/// `¬(p >= 0)` is `-p - 1 >= 0`.
pub fn complement_predicate(p: &Predicate) -> Result<Predicate, TsysError> {
    let mut acc: Vec<Vec<Poly<VarId>>> = vec![Vec::new()];
    for d in &p.disjuncts {
        let negs: Vec<Poly<VarId>> = d
            .conjuncts
            .iter()
            .filter(|q| q.as_constant().map_or(true, |c| !c.is_negative()))
            .map(|q| &(-q) - &Poly::one())
            .collect();
        if d.is_trivially_false() {
            continue;
        }
        let mut next: Vec<Vec<Poly<VarId>>> = Vec::new();
        for r in &acc {
            for n in &negs {
                let mut c = r.clone();
                c.push(n.clone());
                if let Some(c) = normalize_conjunction(&c) {
                    if !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
        }
        if next.len() > DNF_CAP {
            return Err(TsysError::DnfTooLarge { cap: DNF_CAP });
        }
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Ok(Predicate::new(acc.into_iter().map(Assertion::new).collect()))
}

pub fn complement(m: &PredicateMap) -> Result<PredicateMap, TsysError> {
    let preds = m.preds.iter().map(complement_predicate).collect::<Result<_, _>>()?;
    Ok(PredicateMap { preds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(v: VarId, c: i64) -> Poly<VarId> {
        &Poly::var(v) - &Poly::constant(c)
    }
    fn le(v: VarId, c: i64) -> Poly<VarId> {
        &Poly::constant(c) - &Poly::var(v)
    }

    #[test]
    fn complement_matches_hand_result() {
        // ¬((n <= 99) ∨ (n = 100 ∧ b <= 0)) = (n >= 101) ∨ (n >= 100 ∧ b >= 1)
        let (n, b) = (0, 1);
        let p = Predicate::new(vec![
            Assertion::new(vec![le(n, 99)]),
            Assertion::new(vec![ge(n, 100), le(n, 100), le(b, 0)]),
        ]);
        let c = complement_predicate(&p).unwrap();
        assert_eq!(c.disjuncts.len(), 2);
        assert_eq!(c.disjuncts[0].conjuncts, vec![ge(n, 101)]);
        assert_eq!(c.disjuncts[1].conjuncts, vec![ge(n, 100), ge(b, 1)]);
    }

    #[test]
    fn complement_is_exact_on_a_grid() {
        let x = Poly::var(0);
        let y = Poly::var(1);
        let p = Predicate::new(vec![
            Assertion::new(vec![&(&x * &y) - &Poly::constant(3), le(0, 4)]),
            Assertion::new(vec![&(&x + &y) - &Poly::constant(1)]),
        ]);
        let c = complement_predicate(&p).unwrap();
        for a in -6..=6 {
            for b in -6..=6 {
                assert_ne!(p.eval(&[a, b]), c.eval(&[a, b]), "at {a},{b}");
            }
        }
    }

    #[test]
    fn complement_of_constants() {
        assert_eq!(complement_predicate(&Predicate::bottom()).unwrap(), Predicate::top());
        assert!(complement_predicate(&Predicate::top()).unwrap().disjuncts.is_empty());
    }

    #[test]
    fn complement_respects_cap() {
        // (x_i >= 0 ∧ y_i >= 0) for 7 variable pairs: 2^7 > 64 disjuncts.
        let ds = (0..7)
            .map(|i| Assertion::new(vec![&Poly::var(2 * i) * &Poly::var(2 * i + 1), &Poly::var(2 * i) + &Poly::var(2 * i + 1)]))
            .collect();
        assert_eq!(
            complement_predicate(&Predicate::new(ds)),
            Err(TsysError::DnfTooLarge { cap: DNF_CAP })
        );
    }

    #[test]
    fn interval_conflicts_are_pruned() {
        assert!(normalize_conjunction(&[ge(0, 3), le(0, 2)]).is_none());
        let t = normalize_conjunction(&[&Poly::constant(3) * &Poly::var(0), ge(0, -5)]).unwrap();
        assert_eq!(t, vec![ge(0, 0)]);
    }
}
