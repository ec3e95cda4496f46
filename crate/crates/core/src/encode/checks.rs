use std::collections::BTreeMap;

use super::entail::encode_entailment;
use super::paths::{choose_cutpoints, Path, PathExec, PATH_CAP};
use super::templates::{poly_template, pred_templates, resolution_templates};
use super::{
    at_state, lift, to_upoly, CheckKind, ConstraintProblem, EncodeError, EncodeOptions, Formula, Layout, SPoly, Sort, Sym,
    TemplateParams, TemplatePred, Unknowns, WitnessSlot,
};
use crate::poly::{Monomial, Poly};
use crate::tsys::{LocId, StepPlan, TransitionSystem};

struct Builder<'a> {
    ts: &'a TransitionSystem,
    p: TemplateParams,
    unk: Unknowns,
    plans: Vec<StepPlan>,
    cons: Vec<Formula>,
    layout: Layout,
}

impl<'a> Builder<'a> {
    fn new(ts: &'a TransitionSystem, p: TemplateParams, opts: EncodeOptions) -> Result<Self, EncodeError> {
        let (cutpoints, paths) = choose_cutpoints(ts, PATH_CAP)?;
        let plans = ts.transitions.iter().map(|t| StepPlan::new(&t.relation, ts.n_vars())).collect();
        let unk = Unknowns { multiplier_sort: opts.multiplier_sort, deadline: opts.deadline, ..Unknowns::default() };
        let layout = Layout { cutpoints, paths, ..Layout::default() };
        Ok(Builder { ts, p, unk, plans, cons: Vec::new(), layout })
    }

    fn finish(self, kind: CheckKind) -> ConstraintProblem {
        ConstraintProblem { kind, params: self.p, unknowns: self.unk.list, constraints: self.cons, layout: self.layout }
    }

    fn identity(&self) -> Vec<SPoly> {
        (0..self.ts.n_vars()).map(|v| Poly::var(Sym::X(v))).collect()
    }

    fn map(&self, name: &str) -> &BTreeMap<LocId, TemplatePred> {
        &self.layout.maps[name]
    }

    fn add_map(&mut self, name: &str, c: usize, d: usize) {
        let cps = self.layout.cutpoints.clone();
        let m = pred_templates(&mut self.unk, self.ts, name, &cps, c, d, self.p.template_degree());
        self.layout.maps.insert(name.to_string(), m);
    }

    fn add_resolution(&mut self) {
        self.layout.resolution = resolution_templates(&mut self.unk, self.ts, self.p.deg);
    }

    /// Path in the original system: non-determinism stays symbolic.
    fn exec_t(&self, path: &Path) -> Option<PathExec> {
        path.exec(self.ts, &self.plans, &mut |_, _, _| None)
    }

    /// Path in the restricted system.
    fn exec_u(&self, path: &Path) -> Option<PathExec> {
        let res = &self.layout.resolution;
        path.exec(self.ts, &self.plans, &mut |t, state, _| Some(at_state(&res[&t], state)))
    }

    fn entail(&mut self, tag: &str, ante: &[SPoly], cons: &[SPoly]) -> Result<Formula, EncodeError> {
        encode_entailment(&mut self.unk, tag, ante, cons, self.p.deg)
    }

    /// `ante ⇒ target(state)` with a selector per target disjunct.
    fn entail_into(&mut self, tag: &str, ante: &[SPoly], target: &TemplatePred, state: &[SPoly]) -> Result<Formula, EncodeError> {
        let rows: Vec<Vec<SPoly>> =
            target.disjuncts.iter().map(|d| d.iter().map(|r| at_state(r, state)).collect()).collect();
        if rows.len() == 1 {
            return self.entail(tag, ante, &rows[0]);
        }
        let mut sels = Vec::new();
        let mut blocks = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            let s = self.unk.fresh(format!("sel_{tag}_{k}"), Sort::Bool);
            sels.push(Formula::Bool(s));
            let b = self.entail(&format!("{tag}_{k}"), ante, r)?;
            blocks.push(Formula::implies(Formula::Bool(s), b));
        }
        blocks.push(Formula::or(sels));
        Ok(Formula::and(blocks))
    }

    fn add_init(&mut self) {
        let ids: Vec<usize> = (0..self.ts.n_vars())
            .map(|v| self.unk.fresh(format!("cinit_{}", self.ts.vars[v]), Sort::Int))
            .collect();
        let state: Vec<SPoly> = ids.iter().map(|u| Poly::var(Sym::U(*u))).collect();
        for th in &self.ts.theta_init.conjuncts {
            self.cons.push(Formula::ge(to_upoly(&at_state(&lift(th), &state))));
        }
        self.layout.init = Some(ids);
    }

    fn init_state(&self) -> Vec<SPoly> {
        self.layout.init.as_ref().expect("init unknowns").iter().map(|u| Poly::var(Sym::U(*u))).collect()
    }

    /// Membership of a state over unknowns in a templated predicate.
    fn member(pred: &TemplatePred, state: &[SPoly]) -> Formula {
        Formula::or(
            pred.disjuncts
                .iter()
                .map(|d| Formula::and(d.iter().map(|r| Formula::ge(to_upoly(&at_state(r, state)))).collect()))
                .collect(),
        )
    }

    fn non_member(pred: &TemplatePred, state: &[SPoly]) -> Formula {
        Formula::and(
            pred.disjuncts
                .iter()
                .map(|d| {
                    Formula::or(
                        d.iter()
                            .map(|r| Formula::ge(to_upoly(&(&-&at_state(r, state) - &Poly::one()))))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Ĩ of type (c,1) inductive in the original system, BI of type (c,d)
    /// inductive in the reversed restricted system with Θ = Ĩ(ℓ_out).
    fn backward(&mut self) -> Result<(), EncodeError> {
        let ts = self.ts;
        self.add_map("It", self.p.c, 1);
        self.add_map("BI", self.p.c, self.p.d);
        self.add_resolution();
        let it = self.map("It").clone();
        let bi = self.map("BI").clone();
        let ident = self.identity();

        let theta: Vec<SPoly> = ts.theta_init.conjuncts.iter().map(lift).collect();
        let f = self.entail("it_init", &theta, &it[&ts.init].disjuncts[0].clone())?;
        self.cons.push(f);

        let paths = self.layout.paths.clone();
        for (pi, path) in paths.iter().enumerate() {
            let Some(ex) = self.exec_t(path) else { continue };
            let mut ante = it[&path.from].disjuncts[0].clone();
            ante.extend(ex.guards.iter().cloned());
            let f = self.entail_into(&format!("it_p{pi}"), &ante, &it[&path.to], &ex.post)?;
            self.cons.push(f);
        }

        for (pi, path) in paths.iter().enumerate() {
            let Some(ex) = self.exec_u(path) else { continue };
            for (j, d) in bi[&path.to].disjuncts.iter().enumerate() {
                let mut ante: Vec<SPoly> = d.iter().map(|r| at_state(r, &ex.post)).collect();
                ante.extend(ex.guards.iter().cloned());
                let f = self.entail_into(&format!("bi_p{pi}_{j}"), &ante, &bi[&path.from], &ident)?;
                self.cons.push(f);
            }
        }

        let ante = it[&ts.terminal].disjuncts[0].clone();
        let f = self.entail_into("bi_theta", &ante, &bi[&ts.terminal], &ident)?;
        self.cons.push(f);
        Ok(())
    }
}

/// Φ1: an initial configuration whose every run under the resolution stays
/// inside an inductive invariant that excludes the terminal location.
pub fn encode_check1(ts: &TransitionSystem, p: TemplateParams) -> Result<ConstraintProblem, EncodeError> {
    encode_check1_with(ts, p, EncodeOptions::default())
}

pub fn encode_check1_with(ts: &TransitionSystem, p: TemplateParams, opts: EncodeOptions) -> Result<ConstraintProblem, EncodeError> {
    let mut b = Builder::new(ts, p, opts)?;
    b.add_map("I", p.c, p.d);
    b.add_resolution();
    b.add_init();
    let inv = b.map("I").clone();
    let init = b.init_state();
    b.cons.push(Builder::member(&inv[&ts.init], &init));

    // I(ℓ_out) = false: the first row of every disjunct is a negative constant.
    for d in &inv[&ts.terminal].disjuncts {
        for (m, coeff) in d[0].split_by(Sym::is_program) {
            let c = to_upoly(&coeff);
            if m == Monomial::one() {
                b.cons.push(Formula::ge(&-&c - &Poly::one()));
            } else {
                b.cons.push(Formula::eq(c));
            }
        }
    }

    let paths = b.layout.paths.clone();
    for (pi, path) in paths.iter().enumerate() {
        if path.from == ts.terminal {
            continue;
        }
        let Some(ex) = b.exec_u(path) else { continue };
        for (j, d) in inv[&path.from].disjuncts.iter().enumerate() {
            let mut ante = d.clone();
            ante.extend(ex.guards.iter().cloned());
            let tag = format!("i_p{pi}_{j}");
            let f = if path.to == ts.terminal {
                b.entail(&tag, &ante, &[Poly::constant(-1)])?
            } else {
                b.entail_into(&tag, &ante, &inv[&path.to], &ex.post)?
            };
            b.cons.push(f);
        }
    }
    Ok(b.finish(CheckKind::Check1))
}

/// Φ2: the backward part plus a path along which BI is not inductive.
pub fn encode_check2(ts: &TransitionSystem, p: TemplateParams) -> Result<ConstraintProblem, EncodeError> {
    encode_check2_with(ts, p, EncodeOptions::default())
}

pub fn encode_check2_with(ts: &TransitionSystem, p: TemplateParams, opts: EncodeOptions) -> Result<ConstraintProblem, EncodeError> {
    let mut b = Builder::new(ts, p, opts)?;
    b.backward()?;
    let bi = b.map("BI").clone();
    let paths = b.layout.paths.clone();
    let mut alts = Vec::new();
    for (pi, path) in paths.iter().enumerate() {
        let Some(ex) = b.exec_t(path) else { continue };
        let pre: Vec<usize> =
            (0..ts.n_vars()).map(|v| b.unk.fresh(format!("wit_p{pi}_{}", ts.vars[v]), Sort::Int)).collect();
        let fresh: Vec<usize> = (0..ex.n_fresh).map(|k| b.unk.fresh(format!("wit_p{pi}_f{k}"), Sort::Int)).collect();
        let subst = |q: &SPoly| -> SPoly {
            q.substitute(&mut |s: &Sym| match s {
                Sym::X(v) => Poly::var(Sym::U(pre[*v])),
                Sym::Fresh(k) => Poly::var(Sym::U(fresh[*k])),
                u => Poly::var(*u),
            })
        };
        let pre_state: Vec<SPoly> = pre.iter().map(|u| Poly::var(Sym::U(*u))).collect();
        let post: Vec<SPoly> = ex.post.iter().map(subst).collect();
        let mut parts: Vec<Formula> = ex.guards.iter().map(|g| Formula::ge(to_upoly(&subst(g)))).collect();
        parts.push(Builder::member(&bi[&path.from], &pre_state));
        parts.push(Builder::non_member(&bi[&path.to], &post));
        let guard = Formula::and(parts);
        b.layout.witnesses.push(WitnessSlot { path: pi, guard: guard.clone(), pre, fresh });
        alts.push(guard);
    }
    b.cons.push(Formula::or(alts));
    Ok(b.finish(CheckKind::Check2))
}

/// Values tried for branching variables: `0` takes the then-branch,
/// `-1` the else-branch.
const BRANCH_VALUES: [i64; 2] = [0, -1];

/// Φ_modified: the backward part, an initial configuration inside C◇, and a
/// ranking function forcing every run kept in C◇ into ¬BI.
pub fn encode_modified(ts: &TransitionSystem, p: TemplateParams) -> Result<ConstraintProblem, EncodeError> {
    encode_modified_with(ts, p, EncodeOptions::default())
}

pub fn encode_modified_with(ts: &TransitionSystem, p: TemplateParams, opts: EncodeOptions) -> Result<ConstraintProblem, EncodeError> {
    for t in &ts.transitions {
        if let Some(x) = t.ndet_var {
            if !ts.vars[x].starts_with("__ndet_") {
                return Err(EncodeError::NotBranchNdet(ts.vars[x].clone()));
            }
        }
    }
    let mut b = Builder::new(ts, p, opts)?;
    b.backward()?;
    b.add_map("Cd", p.c, p.d);
    for &l in &b.layout.cutpoints.clone() {
        let f = poly_template(&mut b.unk, &format!("f_{}", ts.locations[l]), ts.n_vars(), p.template_degree());
        b.layout.ranking.insert(l, f);
    }
    b.add_init();
    let cd = b.map("Cd").clone();
    let bi = b.map("BI").clone();
    let init = b.init_state();
    b.cons.push(Builder::member(&cd[&ts.init], &init));

    // Deterministic successors: every branching variable fixed to 0 or -1.
    let mut variants: Vec<(usize, PathExec)> = Vec::new();
    for (pi, path) in b.layout.paths.clone().iter().enumerate() {
        let Some(sym) = b.exec_t(path) else { continue };
        for combo in 0..(1usize << sym.n_fresh) {
            let val = |k: usize| BRANCH_VALUES[(combo >> k) & 1];
            if let Some(ex) = path.exec(ts, &b.plans, &mut |_, _, k| Some(Poly::constant(val(k)))) {
                variants.push((pi, ex));
            }
        }
    }

    let rank = b.layout.ranking.clone();
    for &l in &b.layout.cutpoints.clone() {
        let fl = rank[&l].clone();
        for (i, cdi) in cd[&l].disjuncts.iter().enumerate() {
            for (j, bij) in bi[&l].disjuncts.iter().enumerate() {
                let mut ante = cdi.clone();
                ante.extend(bij.iter().cloned());
                let mut sels = Vec::new();
                let mut blocks = Vec::new();
                for (vi, (pi, ex)) in variants.iter().enumerate() {
                    let to = b.layout.paths[*pi].to;
                    if b.layout.paths[*pi].from != l {
                        continue;
                    }
                    for (k, cdk) in cd[&to].disjuncts.iter().enumerate() {
                        let mut goal = ex.guards.clone();
                        goal.extend(cdk.iter().map(|r| at_state(r, &ex.post)));
                        goal.push(&(&fl - &at_state(&rank[&to], &ex.post)) - &Poly::one());
                        goal.push(fl.clone());
                        let tag = format!("rk_{}_{i}_{j}_v{vi}_{k}", ts.locations[l]);
                        let s = b.unk.fresh(format!("sel_{tag}"), Sort::Bool);
                        let e = b.entail(&tag, &ante, &goal)?;
                        sels.push(Formula::Bool(s));
                        blocks.push(Formula::implies(Formula::Bool(s), e));
                    }
                }
                // No successor at all: the disjunct pair must be empty.
                if sels.is_empty() {
                    let e = b.entail(&format!("rk_{}_{i}_{j}_none", ts.locations[l]), &ante, &[Poly::constant(-1)])?;
                    b.cons.push(e);
                    continue;
                }
                blocks.push(Formula::or(sels));
                b.cons.push(Formula::and(blocks));
            }
        }
    }
    Ok(b.finish(CheckKind::Modified))
}
