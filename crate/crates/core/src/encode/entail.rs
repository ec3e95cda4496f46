//! Elimination of `∀x. ⋀ a_i(x) >= 0 ⇒ q(x) >= 0`.
//!
//! The consequent must be a non-negative combination `λ0 + Σ λ_b·b` of a
//! basis built from the antecedent: the conjuncts themselves, or, for
//! degree >= 2, their products. Only products with at most one factor
//! carrying unknowns are kept so that constraints stay low-degree in the
//! unknowns. An infeasible antecedent is handled by a second combination
//! deriving `-1 >= 0`.

use std::collections::BTreeSet;

use super::{to_upoly, EncodeError, Formula, SPoly, Sym, Unknowns};
use crate::poly::Poly;

const MAX_DEGREE: u32 = 8;

fn prog_degree(p: &SPoly) -> u32 {
    p.degree_in(Sym::is_program)
}

fn has_unknowns(p: &SPoly) -> bool {
    p.vars().iter().any(|s| !s.is_program())
}

fn basis(ante: &[SPoly], deg: u32, bound: u32) -> Vec<SPoly> {
    let ante: Vec<&SPoly> = ante.iter().filter(|a| a.as_constant().is_none()).collect();
    if deg <= 1 {
        return ante.into_iter().cloned().collect();
    }
    let mut out: Vec<SPoly> = Vec::new();
    let mut seen: BTreeSet<SPoly> = BTreeSet::new();
    // (product, last factor index, #factors with unknowns, #factors)
    let mut frontier: Vec<(SPoly, usize, usize, u32)> = vec![(Poly::one(), 0, 0, 0)];
    while let Some((p, start, symbolic, k)) = frontier.pop() {
        if k > 0 && seen.insert(p.clone()) {
            out.push(p.clone());
        }
        if k == deg {
            continue;
        }
        for (i, a) in ante.iter().enumerate().skip(start) {
            let s = symbolic + usize::from(has_unknowns(a));
            if s > 1 {
                continue;
            }
            let q = &p * a;
            if prog_degree(&q) > bound {
                continue;
            }
            frontier.push((q, i, s, k + 1));
        }
    }
    out.sort();
    out
}

/// Multipliers and coefficient-matching constraints for `target ≡ Σ λ_b·b`
/// where `target` absorbs any constant slack.
fn combination(unk: &mut Unknowns, prefix: &str, target: &SPoly, basis: &[SPoly], slack: bool) -> Formula {
    let sort = unk.multiplier_sort;
    let mut rest = target.clone();
    let mut cs = Vec::new();
    if slack {
        let l0 = unk.fresh(format!("{prefix}_0"), sort);
        rest = &rest - &Poly::var(Sym::U(l0));
        cs.push(Formula::ge(Poly::var(l0)));
    }
    for (i, b) in basis.iter().enumerate() {
        let l = unk.fresh(format!("{prefix}_{}", i + 1), sort);
        rest = &rest - &(b * &Poly::var(Sym::U(l)));
        cs.push(Formula::ge(Poly::var(l)));
    }
    for (_, coeff) in rest.split_by(Sym::is_program) {
        cs.push(Formula::eq(to_upoly(&coeff)));
    }
    Formula::and(cs)
}

/// Encodes `ante ⇒ ⋀ cons` with multiplier unknowns named `lam_<tag>_...`.
pub fn encode_entailment(
    unk: &mut Unknowns,
    tag: &str,
    ante: &[SPoly],
    cons: &[SPoly],
    deg: u32,
) -> Result<Formula, EncodeError> {
    if unk.deadline.is_some_and(|d| std::time::Instant::now() > d) {
        return Err(EncodeError::Deadline);
    }
    let cons_deg = cons.iter().map(prog_degree).max().unwrap_or(0);
    let ante_deg = ante.iter().map(prog_degree).max().unwrap_or(0);
    let got = cons_deg.max(ante_deg);
    if got > MAX_DEGREE {
        return Err(EncodeError::DegreeOverflow { got, max: MAX_DEGREE });
    }
    // Linear antecedents need no products; otherwise allow products up to
    // the larger of the requested and the consequent degree.
    let eff = if ante_deg <= 1 && cons_deg <= 1 { 1 } else { deg.max(1) };
    let bound = eff.max(cons_deg).max(ante_deg);
    let b = basis(ante, eff, bound);
    let mut blocks = Vec::new();
    for (i, q) in cons.iter().enumerate() {
        blocks.push(combination(unk, &format!("lam_{tag}_{i}"), q, &b, true));
    }
    let main = Formula::and(blocks);
    if b.is_empty() || main == Formula::True {
        return Ok(main);
    }
    // Infeasible antecedent: Σ μ_b·b ≡ -1.
    let infeasible = combination(unk, &format!("lam_{tag}_inf"), &Poly::constant(-1), &b, false);
    Ok(Formula::or(vec![main, infeasible]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{Model, ModelValue};
    use num_rational::BigRational;

    fn x() -> SPoly {
        Poly::var(Sym::X(0))
    }

    fn assign(unk: &Unknowns, vals: &[(&str, i64)]) -> Model {
        let mut m = Model::default();
        for (i, u) in unk.list.iter().enumerate() {
            let v = vals.iter().find(|(n, _)| *n == u.name).map_or(0, |p| p.1);
            m.values.insert(i, ModelValue::Num(BigRational::from_integer(v.into())));
        }
        m
    }

    #[test]
    fn hand_farkas_certificate() {
        let mut unk = Unknowns::default();
        let f = encode_entailment(&mut unk, "t", &[&x() - &Poly::constant(9)], &[x()], 1).unwrap();
        let m = assign(&unk, &[("lam_t_0_0", 9), ("lam_t_0_1", 1)]);
        assert_eq!(f.eval(&m), Some(true));
        let m = assign(&unk, &[("lam_t_0_0", 8), ("lam_t_0_1", 1)]);
        assert_eq!(f.eval(&m), Some(false));
    }

    #[test]
    fn empty_antecedent_constant_consequent() {
        let mut unk = Unknowns::default();
        let f = encode_entailment(&mut unk, "t", &[], &[Poly::one()], 1).unwrap();
        let m = assign(&unk, &[("lam_t_0_0", 1)]);
        assert_eq!(f.eval(&m), Some(true));
    }

    #[test]
    fn conjunct_reuse() {
        let mut unk = Unknowns::default();
        let f = encode_entailment(&mut unk, "t", &[x(), -x()], &[-x()], 1).unwrap();
        let m = assign(&unk, &[("lam_t_0_2", 1)]);
        assert_eq!(f.eval(&m), Some(true));
    }

    #[test]
    fn infeasible_antecedent_entails_anything() {
        let mut unk = Unknowns::default();
        let ante = [&x() - &Poly::constant(1), -x()];
        let f = encode_entailment(&mut unk, "t", &ante, &[Poly::var(Sym::X(1))], 1).unwrap();
        let m = assign(&unk, &[("lam_t_inf_1", 1), ("lam_t_inf_2", 1)]);
        assert_eq!(f.eval(&m), Some(true));
    }

    #[test]
    fn products_for_quadratic_consequent() {
        // x >= 0 ⇒ x^2 >= 0 needs the product x·x.
        let mut unk = Unknowns::default();
        let f = encode_entailment(&mut unk, "t", &[x()], &[x().pow(2)], 2).unwrap();
        let names: Vec<&str> = unk.list.iter().map(|u| u.name.as_str()).collect();
        assert!(names.len() >= 3, "{names:?}");
        let ok = (1..names.len()).any(|i| {
            let name = format!("lam_t_0_{i}");
            f.eval(&assign(&unk, &[(name.as_str(), 1)])) == Some(true)
        });
        assert!(ok);
    }
}
