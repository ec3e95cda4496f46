//! Inductiveness along cutpoint paths.
//!
//! Each path is executed symbolically; the resulting implication is checked
//! on every valuation of the variables it mentions, with single-variable
//! linear bounds folded into the ranges and the remaining antecedent
//! constraints evaluated as soon as their variables are assigned.

use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{VarBox, Verdict};
use crate::encode::{cutpoint_paths, SPoly, Sym, PATH_CAP};
use crate::poly::{CompiledPoly, Monomial, Poly};
use crate::tsys::{Assertion, LocId, NdetBox, Predicate, PredicateMap, StepPlan, TransitionSystem};

/// A predicate with every row compiled.
#[derive(Clone, Debug)]
pub struct CompiledPred {
    pub disjuncts: Vec<Vec<CompiledPoly>>,
}

impl CompiledPred {
    pub fn new(p: &Predicate, f: &mut impl FnMut(&Poly<usize>) -> Poly<usize>) -> Self {
        CompiledPred {
            disjuncts: p.disjuncts.iter().map(|d| d.conjuncts.iter().map(|r| CompiledPoly::new(&f(r))).collect()).collect(),
        }
    }

    pub fn eval(&self, vals: &[i128]) -> bool {
        self.disjuncts.iter().any(|d| d.iter().all(|r| r.nonneg(vals)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `P(from)(x) ∧ guards ⇒ P(to)(post)`.
    Forward,
    /// `P(to)(post) ∧ guards ⇒ P(from)(x)`: inductiveness in the reversed system.
    Backward,
}

fn index_poly(p: &SPoly, n: usize) -> Poly<usize> {
    p.map_vars(|s| match s {
        Sym::X(v) => *v,
        Sym::Fresh(k) => n + *k,
        Sym::U(_) => unreachable!("unknown in program path"),
    })
}

/// Tightens `ranges` with a linear single-variable row; `false` if empty.
fn tighten(row: &Poly<usize>, ranges: &mut [(i128, i128)]) -> Option<bool> {
    if row.degree() != 1 {
        return None;
    }
    let vars = row.vars();
    if vars.len() != 1 {
        return None;
    }
    let v = *vars.iter().next().unwrap();
    let a = row.coeff(&Monomial::var(v)).to_i128()?;
    let c = row.constant_term().to_i128()?;
    let r = &mut ranges[v];
    if a > 0 {
        r.0 = r.0.max(Integer::div_ceil(&(-c), &a));
    } else {
        r.1 = r.1.min(Integer::div_floor(&c, &(-a)));
    }
    Some(r.0 <= r.1)
}

struct Search<'a> {
    order: Vec<usize>,
    ranges: Vec<(i128, i128)>,
    /// Rows checked once position `i` of `order` is assigned.
    at_level: Vec<Vec<&'a CompiledPoly>>,
    cons: &'a CompiledPred,
    budget: u64,
    spent: u64,
}

enum Outcome {
    Holds,
    Counterexample(Vec<i128>),
    OutOfBudget,
}

impl Search<'_> {
    fn run(&mut self, vals: &mut Vec<i128>, level: usize) -> Outcome {
        if level == self.order.len() {
            return if self.cons.eval(vals) { Outcome::Holds } else { Outcome::Counterexample(vals.clone()) };
        }
        let v = self.order[level];
        let (lo, hi) = self.ranges[v];
        for x in lo..=hi {
            self.spent += 1;
            if self.spent > self.budget {
                return Outcome::OutOfBudget;
            }
            vals[v] = x;
            if self.at_level[level].iter().all(|r| r.nonneg(vals)) {
                match self.run(vals, level + 1) {
                    Outcome::Holds => {}
                    other => return other,
                }
            }
        }
        Outcome::Holds
    }
}

/// Checks one implication `ante ⇒ cons` over the box; variables at indices
/// `n..` are fresh values ranging over `ndet`.
fn check_implication(
    ante: &Assertion,
    cons: &CompiledPred,
    n: usize,
    m: usize,
    bx: &VarBox,
    ndet: NdetBox,
    budget: u64,
) -> Outcome {
    let mut ranges: Vec<(i128, i128)> = (0..m).map(|i| if i < n { bx.ranges[i] } else { (ndet.lo, ndet.hi) }).collect();
    let mut rest: Vec<&Poly<usize>> = Vec::new();
    for row in &ante.conjuncts {
        if let Some(c) = row.as_constant() {
            if c < 0.into() {
                return Outcome::Holds;
            }
            continue;
        }
        match tighten(row, &mut ranges) {
            Some(false) => return Outcome::Holds,
            Some(true) => {}
            None => rest.push(row),
        }
    }
    let compiled: Vec<CompiledPoly> = rest.iter().map(|r| CompiledPoly::new(r)).collect();
    let mut relevant: Vec<usize> = Vec::new();
    for r in rest.iter().copied().chain(ante.conjuncts.iter()) {
        relevant.extend(r.vars());
    }
    for d in &cons.disjuncts {
        for r in d {
            relevant.extend(r.vars());
        }
    }
    relevant.sort();
    relevant.dedup();
    // Narrow ranges first so pruning happens early.
    relevant.sort_by_key(|v| ranges[*v].1 - ranges[*v].0);
    let pos = |v: usize| relevant.iter().position(|w| *w == v).unwrap();
    let mut at_level: Vec<Vec<&CompiledPoly>> = vec![Vec::new(); relevant.len()];
    for c in &compiled {
        let lvl = c.vars().into_iter().map(pos).max().unwrap_or(0);
        at_level[lvl].push(c);
    }
    let mut vals: Vec<i128> = ranges.iter().map(|(l, h)| 0i128.clamp(*l, (*h).max(*l))).collect();
    if relevant.is_empty() {
        return if compiled.iter().all(|c| c.nonneg(&vals)) && !cons.eval(&vals) {
            Outcome::Counterexample(vals)
        } else {
            Outcome::Holds
        };
    }
    let mut s = Search { order: relevant, ranges, at_level, cons, budget, spent: 0 };
    s.run(&mut vals, 0)
}

/// A valuation of the box satisfying `ante` but not `cons`. `Err` when the
/// enumeration budget runs out.
pub(crate) fn counterexample(ante: &Assertion, cons: &Predicate, bx: &VarBox, budget: u64) -> Result<Option<Vec<i128>>, ()> {
    let n = bx.ranges.len();
    let cons = CompiledPred::new(cons, &mut |r| r.clone());
    match check_implication(ante, &cons, n, n, bx, NdetBox::new(0, 0), budget) {
        Outcome::Holds => Ok(None),
        Outcome::Counterexample(x) => Ok(Some(x)),
        Outcome::OutOfBudget => Err(()),
    }
}

/// Inductiveness of `pm` along every path between `cutpoints`, checked for
/// start valuations in `bx` and non-deterministic values in `ndet`.
/// Locations outside `cutpoints` are not constrained.
pub fn is_inductive_cut(
    ts: &TransitionSystem,
    cutpoints: &[LocId],
    pm: &PredicateMap,
    bx: &VarBox,
    ndet: NdetBox,
    dir: Direction,
    budget: u64,
    label: &str,
) -> Verdict {
    let mut v = Verdict::default();
    let paths = match cutpoint_paths(ts, cutpoints, PATH_CAP) {
        Ok(p) => p,
        Err(e) => {
            v.fail(label, format!("cannot enumerate paths: {e}"));
            return v;
        }
    };
    let n = ts.n_vars();
    let plans: Vec<StepPlan> = ts.transitions.iter().map(|t| StepPlan::new(&t.relation, n)).collect();
    let results: Vec<Verdict> = paths
        .par_iter()
        .map(|path| {
            let mut out = Verdict::default();
            let Some(ex) = path.exec(ts, &plans, &mut |_, _, _| None) else { return out };
            let m = n + ex.n_fresh;
            let post: Vec<Poly<usize>> = ex.post.iter().map(|p| index_poly(p, n)).collect();
            let guards: Vec<Poly<usize>> = ex.guards.iter().map(|p| index_poly(p, n)).collect();
            let at_post = |r: &Poly<usize>| r.substitute(&mut |v: &usize| post[*v].clone());
            let (ante_pred, cons) = match dir {
                Direction::Forward => {
                    let ante: Vec<Assertion> = pm.get(path.from).disjuncts.clone();
                    (ante, CompiledPred::new(pm.get(path.to), &mut |r| at_post(r)))
                }
                Direction::Backward => {
                    let ante: Vec<Assertion> = pm
                        .get(path.to)
                        .disjuncts
                        .iter()
                        .map(|d| Assertion::new(d.conjuncts.iter().map(at_post).collect()))
                        .collect();
                    (ante, CompiledPred::new(pm.get(path.from), &mut |r| r.clone()))
                }
            };
            for d in ante_pred {
                let mut conj = d.conjuncts.clone();
                conj.extend(guards.iter().cloned());
                match check_implication(&Assertion::new(conj), &cons, n, m, bx, ndet, budget) {
                    Outcome::Holds => {}
                    Outcome::Counterexample(vals) => {
                        let names: Vec<String> = (0..m)
                            .map(|i| if i < n { format!("{}={}", ts.vars[i], vals[i]) } else { format!("ndet{}={}", i - n, vals[i]) })
                            .collect();
                        let trans: Vec<String> = path.transitions.iter().map(|t| t.to_string()).collect();
                        out.fail(
                            label,
                            format!(
                                "path {} -> {} via [{}] at {}",
                                ts.locations[path.from],
                                ts.locations[path.to],
                                trans.join(" "),
                                names.join(", ")
                            ),
                        );
                        return out;
                    }
                    Outcome::OutOfBudget => {
                        out.fail(label, format!("enumeration budget of {budget} exceeded on a path from {}", ts.locations[path.from]));
                        return out;
                    }
                }
            }
            out
        })
        .collect();
    for r in results {
        v.merge(r);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::loop_heads;
    use crate::frontend::{lower, parse_program};

    fn fig() -> TransitionSystem {
        let src = "var x, y\nwhile x >= 9 do x := ndet(); y := 10*x; while x <= y do x := x + 1 od od";
        lower(&parse_program(src).unwrap()).unwrap()
    }

    fn ge(v: usize, c: i64) -> Poly<usize> {
        &Poly::var(v) - &Poly::constant(c)
    }

    #[test]
    fn forward_and_backward() {
        let ts = fig();
        let mut res = crate::tsys::Resolution::new();
        res.insert(ts.ndet_transitions()[0], Poly::constant(9));
        let u = ts.restrict(&res).unwrap();
        let cuts = loop_heads(&ts);
        let mut pm = PredicateMap::uniform(ts.n_locs(), Predicate::single(Assertion::new(vec![ge(0, 9)])));
        pm.set(ts.terminal, Predicate::bottom());
        let bx = VarBox::uniform(2, -5, 110);
        let nd = NdetBox::new(-5, 110);
        let v = is_inductive_cut(&u, &cuts, &pm, &bx, nd, Direction::Forward, 1 << 30, "I");
        assert!(v.ok(), "{v}");
        // With real non-determinism the same map is not inductive.
        let v = is_inductive_cut(&ts, &cuts, &pm, &bx, nd, Direction::Forward, 1 << 30, "I");
        assert!(!v.ok());
        assert!(v.violations[0].detail.contains("ndet0="), "{v}");
        // Bottom everywhere is trivially backward inductive.
        let bot = PredicateMap::uniform(ts.n_locs(), Predicate::bottom());
        assert!(is_inductive_cut(&u, &cuts, &bot, &bx, nd, Direction::Backward, 1 << 30, "BI").ok());
    }

    #[test]
    fn budget_is_reported() {
        let ts = fig();
        let cuts = loop_heads(&ts);
        let mut pm = PredicateMap::uniform(ts.n_locs(), Predicate::top());
        pm.set(ts.terminal, Predicate::single(Assertion::new(vec![Poly::var(0) * Poly::var(1)])));
        let bx = VarBox::uniform(2, -5, 110);
        let v = is_inductive_cut(&ts, &cuts, &pm, &bx, NdetBox::new(-5, 110), Direction::Forward, 10, "I");
        assert!(v.violations.iter().any(|x| x.detail.contains("budget")), "{v}");
    }
}
