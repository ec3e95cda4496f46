use std::collections::BTreeMap;

use super::{SPoly, Sort, Sym, TemplateParams, TemplatePred, Unknowns};
use crate::poly::{monomials_up_to, Poly};
use crate::tsys::{LocId, TransitionSystem};

/// Templates of Check 1: a predicate per cutpoint and a resolution
/// polynomial per non-deterministic transition.
pub struct Templates {
    pub pred: BTreeMap<LocId, TemplatePred>,
    pub resolution: BTreeMap<usize, SPoly>,
    pub unknowns: Unknowns,
}

pub fn make_templates(ts: &TransitionSystem, p: TemplateParams, cutpoints: &[LocId]) -> Templates {
    let mut unknowns = Unknowns::default();
    let pred = pred_templates(&mut unknowns, ts, "I", cutpoints, p.c, p.d, p.template_degree());
    let resolution = resolution_templates(&mut unknowns, ts, p.deg);
    Templates { pred, resolution, unknowns }
}

/// `Σ coef_m · m` over all monomials of degree at most `deg`.
pub(crate) fn poly_template(unk: &mut Unknowns, prefix: &str, n: usize, deg: u32) -> SPoly {
    let vars: Vec<Sym> = (0..n).map(Sym::X).collect();
    let mut p = Poly::zero();
    for (m, mono) in monomials_up_to(&vars, deg).into_iter().enumerate() {
        let u = unk.fresh(format!("{prefix}_coef_{m}"), Sort::Int);
        p = &p + &(&Poly::term(1, mono) * &Poly::var(Sym::U(u)));
    }
    p
}

pub(crate) fn pred_templates(
    unk: &mut Unknowns,
    ts: &TransitionSystem,
    map: &str,
    cutpoints: &[LocId],
    c: usize,
    d: usize,
    deg: u32,
) -> BTreeMap<LocId, TemplatePred> {
    let n = ts.n_vars();
    cutpoints
        .iter()
        .map(|&l| {
            let name = &ts.locations[l];
            let disjuncts = (0..d)
                .map(|j| (0..c).map(|k| poly_template(unk, &format!("{map}_{name}_{j}_{k}"), n, deg)).collect())
                .collect();
            (l, TemplatePred { disjuncts })
        })
        .collect()
}

pub(crate) fn resolution_templates(unk: &mut Unknowns, ts: &TransitionSystem, deg: u32) -> BTreeMap<usize, SPoly> {
    ts.ndet_transitions()
        .into_iter()
        .map(|t| (t, poly_template(unk, &format!("Rna_{t}"), ts.n_vars(), deg)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::loop_heads;
    use crate::frontend::{lower, parse_program};

    #[test]
    fn unknown_count_for_nested_loop_example() {
        let src = "var x, y\nwhile x >= 9 do x := ndet(); y := 10*x; while x <= y do x := x + 1 od od";
        let ts = lower(&parse_program(src).unwrap()).unwrap();
        let cps = loop_heads(&ts);
        let t = make_templates(&ts, TemplateParams::new(1, 1, 1).unwrap(), &cps);
        assert_eq!(t.unknowns.list.len(), 12);
        assert_eq!(t.pred.len(), 3);
        let t = make_templates(&ts, TemplateParams::new(1, 1, 0).unwrap(), &cps);
        assert_eq!(t.unknowns.list.len(), 10);
        assert_eq!(t.resolution.values().next().unwrap().degree_in(Sym::is_program), 0);
        assert_eq!(t.unknowns.list[0].name, "I_l0_0_0_coef_0");
    }

    #[test]
    fn conjunctive_when_d_is_one() {
        let src = "var x\nwhile x >= 0 do x := x - 1 od";
        let ts = lower(&parse_program(src).unwrap()).unwrap();
        let t = make_templates(&ts, TemplateParams::new(3, 1, 1).unwrap(), &loop_heads(&ts));
        assert!(t.pred.values().all(|p| p.disjuncts.len() == 1 && p.disjuncts[0].len() == 3));
    }
}
