use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::cert::{Certificate, Witness};
use crate::encode::{ConstraintProblem, Model, SPoly, Sort, Sym, TemplatePred};
use crate::poly::Poly;
use crate::tsys::{Assertion, Configuration, Predicate, PredicateMap, StepPlan, TransitionSystem, VarId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("unknown `{0}` has no value in the model")]
    Missing(String),
    #[error("integer unknown `{0}` has non-integral value {1}")]
    NonIntegral(String, String),
    #[error("no witness disjunct holds in the model")]
    NoWitness,
    #[error("witness value does not fit in 128 bits")]
    Overflow,
}

fn value(problem: &ConstraintProblem, model: &Model, u: usize) -> Result<BigRational, ExtractError> {
    let name = &problem.unknowns[u].name;
    let q = model.get_num(u).ok_or_else(|| ExtractError::Missing(name.clone()))?;
    if problem.unknowns[u].sort == Sort::Int && !q.is_integer() {
        return Err(ExtractError::NonIntegral(name.clone(), q.to_string()));
    }
    Ok(q.clone())
}

/// Substitutes model values for unknowns; the result has rational
/// coefficients cleared to integers by their least common denominator.
pub fn instantiate(problem: &ConstraintProblem, model: &Model, p: &SPoly) -> Result<Poly<VarId>, ExtractError> {
    let mut terms: BTreeMap<crate::poly::Monomial<VarId>, BigRational> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut coeff = BigRational::from_integer(c.clone());
        let mut factors = Vec::new();
        for (s, e) in m.factors() {
            match s {
                Sym::U(u) => {
                    let v = value(problem, model, *u)?;
                    for _ in 0..*e {
                        coeff *= &v;
                    }
                }
                Sym::X(v) => factors.push((*v, *e)),
                Sym::Fresh(_) => unreachable!("fresh symbol in template"),
            }
        }
        *terms.entry(crate::poly::Monomial::from_factors(factors)).or_insert_with(BigRational::zero) += coeff;
    }
    let lcd = terms.values().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<_> = terms
        .into_iter()
        .map(|(m, q)| (m, (q * BigRational::from_integer(lcd.clone())).to_integer()))
        .collect();
    Ok(Poly::from_terms(ints))
}

/// Template predicate to concrete predicate: rows that are non-negative
/// constants are dropped, disjuncts with a negative constant row vanish.
fn predicate(problem: &ConstraintProblem, model: &Model, t: &TemplatePred) -> Result<Predicate, ExtractError> {
    let mut ds = Vec::new();
    'd: for d in &t.disjuncts {
        let mut rows = Vec::new();
        for r in d {
            let p = instantiate(problem, model, r)?;
            match p.as_constant() {
                Some(c) if c.is_negative() => continue 'd,
                Some(_) => {}
                None => rows.push(p),
            }
        }
        ds.push(Assertion::new(rows));
    }
    Ok(Predicate::new(ds))
}

fn pred_map(
    problem: &ConstraintProblem,
    model: &Model,
    ts: &TransitionSystem,
    name: &str,
) -> Result<Option<PredicateMap>, ExtractError> {
    let Some(m) = problem.layout.maps.get(name) else { return Ok(None) };
    let mut out = PredicateMap::uniform(ts.n_locs(), Predicate::top());
    for (l, t) in m {
        out.set(*l, predicate(problem, model, t)?);
    }
    Ok(Some(out))
}

fn to_i128(q: &BigRational) -> Result<i128, ExtractError> {
    q.to_integer().to_i128().ok_or(ExtractError::Overflow)
}

/// Builds the certificate described by a model. Multipliers are dropped.
pub fn extract_certificate(
    problem: &ConstraintProblem,
    model: &Model,
    ts: &TransitionSystem,
) -> Result<Certificate, ExtractError> {
    let lay = &problem.layout;
    let mut cert = Certificate::new(problem.kind, ts.clone(), lay.cutpoints.clone());
    for (t, r) in &lay.resolution {
        cert.resolution.insert(*t, instantiate(problem, model, r)?);
    }
    cert.inv = pred_map(problem, model, ts, "I")?;
    cert.itilde = pred_map(problem, model, ts, "It")?;
    cert.bi = pred_map(problem, model, ts, "BI")?;
    cert.cdiamond = pred_map(problem, model, ts, "Cd")?;
    if let Some(it) = &cert.itilde {
        cert.theta = it.get(ts.terminal).disjuncts.first().cloned().unwrap_or_else(Assertion::bottom);
    }
    if !lay.ranking.is_empty() {
        let mut r = BTreeMap::new();
        for (l, f) in &lay.ranking {
            r.insert(*l, instantiate(problem, model, f)?);
        }
        cert.ranking = Some(r);
    }
    if let Some(ids) = &lay.init {
        cert.init = Some(ids.iter().map(|u| value(problem, model, *u).and_then(|q| to_i128(&q))).collect::<Result<_, _>>()?);
    }
    if !lay.witnesses.is_empty() {
        let slot = lay
            .witnesses
            .iter()
            .find(|w| w.guard.eval(model) == Some(true))
            .ok_or(ExtractError::NoWitness)?;
        let pre: Vec<i128> = slot.pre.iter().map(|u| value(problem, model, *u).and_then(|q| to_i128(&q))).collect::<Result<_, _>>()?;
        let fresh: Vec<i128> =
            slot.fresh.iter().map(|u| value(problem, model, *u).and_then(|q| to_i128(&q))).collect::<Result<_, _>>()?;
        cert.witness = Some(replay_path(ts, &lay.paths[slot.path], &pre, &fresh).ok_or(ExtractError::Overflow)?);
    }
    Ok(cert)
}

/// Concrete configurations along `path` from `pre` with the given
/// non-deterministic values.
pub(crate) fn replay_path(ts: &TransitionSystem, path: &crate::encode::Path, pre: &[i128], fresh: &[i128]) -> Option<Witness> {
    let plans: Vec<StepPlan> = ts.transitions.iter().map(|t| StepPlan::new(&t.relation, ts.n_vars())).collect();
    let ex = path.exec(ts, &plans, &mut |_, _, _| None)?;
    let mut configs = Vec::new();
    let mut loc = path.from;
    for (i, st) in ex.states.iter().enumerate() {
        if i > 0 {
            loc = ts.transitions[path.transitions[i - 1]].target;
        }
        let vals = st
            .iter()
            .map(|p| {
                p.eval_i128(|s| match s {
                    Sym::X(v) => pre[*v],
                    Sym::Fresh(k) => fresh[*k],
                    Sym::U(_) => 0,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        configs.push(Configuration { loc, vals });
    }
    Some(Witness { transitions: path.transitions.clone(), configs })
}
