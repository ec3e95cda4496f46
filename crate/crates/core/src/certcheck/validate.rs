//! Certificate validation.

use super::cut::Direction;
use super::cut::counterexample;
use super::{is_inductive_cut, show_config, VarBox, Verdict};
use crate::cert::{Certificate, Witness};
use crate::encode::{cutpoint_paths, CheckKind, PATH_CAP};
use crate::reach::{bounded_reach, replay, ReachQuery, ReachResult};
use crate::tsys::{
    complement_predicate, Configuration, NdetBox, Predicate, PredicateMap, StepPlan, TransitionSystem,
};

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    /// Range of every program variable.
    pub lo: i128,
    pub hi: i128,
    /// Range of non-deterministic values; defaults to `[lo, hi]`.
    pub ndet: Option<NdetBox>,
    /// Valuations visited per implication before giving up.
    pub budget: u64,
    /// Configurations explored by the terminal-coverage audit.
    pub audit_cap: usize,
    /// Cutpoint steps allowed when replaying a ranking descent.
    pub descent_steps: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { lo: -5, hi: 110, ndet: None, budget: 400_000_000, audit_cap: 200_000, descent_steps: 1_000_000 }
    }
}

impl ValidateOptions {
    fn var_box(&self, ts: &TransitionSystem) -> VarBox {
        VarBox::uniform(ts.n_vars(), self.lo, self.hi)
    }

    fn ndet_box(&self) -> NdetBox {
        self.ndet.unwrap_or(NdetBox::new(self.lo, self.hi))
    }
}

/// Every valuation of the box satisfying `a` satisfies `b`.
fn contained(ts: &TransitionSystem, a: &Predicate, b: &Predicate, bx: &VarBox, budget: u64, label: &str, v: &mut Verdict) {
    for d in &a.disjuncts {
        match counterexample(d, b, bx, budget) {
            Ok(None) => {}
            Ok(Some(x)) => {
                let vals: Vec<String> = x.iter().zip(&ts.vars).map(|(v, n)| format!("{n}={v}")).collect();
                v.fail(label, vals.join(", "));
                return;
            }
            Err(()) => {
                v.fail(label, format!("enumeration budget of {budget} exceeded"));
                return;
            }
        }
    }
}

fn map<'c>(m: &'c Option<PredicateMap>, name: &str, v: &mut Verdict) -> Option<&'c PredicateMap> {
    if m.is_none() {
        v.fail("format", format!("missing map {name}"));
    }
    m.as_ref()
}

/// Checks every condition of the certificate's check kind. Conditions that
/// quantify over configurations are checked on the box of `opts`.
pub fn validate_certificate(cert: &Certificate, opts: &ValidateOptions) -> Verdict {
    let mut v = Verdict::default();
    let ts = &cert.system;
    let bx = opts.var_box(ts);
    let nd = opts.ndet_box();
    let u = match cert.restricted() {
        Ok(u) => u,
        Err(e) => {
            v.fail("resolution", e.to_string());
            return v;
        }
    };
    let theta_init = Predicate::single(ts.theta_init.clone());
    match cert.kind {
        CheckKind::Check1 => {
            let Some(inv) = map(&cert.inv, "I", &mut v) else { return v };
            match &cert.init {
                Some(x) if x.len() == ts.n_vars() => {
                    if !ts.theta_init.eval(x) || !inv.eval(ts.init, x) {
                        v.fail("initial configuration", format!("{x:?} is not an initial configuration inside I"));
                    }
                }
                _ => {
                    let mut inside = Verdict::default();
                    let pm = inv.get(ts.init);
                    let meet = Predicate::new(pm.disjuncts.iter().map(|d| d.and(&ts.theta_init)).collect());
                    contained(ts, &meet, &Predicate::bottom(), &bx, opts.budget, "", &mut inside);
                    if inside.ok() {
                        v.fail("initial configuration", "no initial configuration of the box is inside I");
                    }
                }
            }
            contained(ts, inv.get(ts.terminal), &Predicate::bottom(), &bx, opts.budget, "terminal exclusion", &mut v);
            v.merge(is_inductive_cut(&u, &cert.cutpoints, inv, &bx, nd, Direction::Forward, opts.budget, "I inductive"));
        }
        CheckKind::Check2 | CheckKind::Modified => {
            let (Some(it), Some(bi)) = (map(&cert.itilde, "Itilde", &mut v), map(&cert.bi, "BI", &mut v)) else {
                return v;
            };
            let theta = Predicate::single(cert.theta.clone());
            contained(ts, &theta_init, it.get(ts.init), &bx, opts.budget, "initial inside Itilde", &mut v);
            contained(ts, it.get(ts.terminal), &theta, &bx, opts.budget, "Itilde(out) inside theta", &mut v);
            v.merge(is_inductive_cut(ts, &cert.cutpoints, it, &bx, nd, Direction::Forward, opts.budget, "Itilde inductive"));
            terminal_audit(cert, opts, &mut v);
            contained(ts, &theta, bi.get(ts.terminal), &bx, opts.budget, "theta inside BI(out)", &mut v);
            v.merge(is_inductive_cut(&u, &cert.cutpoints, bi, &bx, nd, Direction::Backward, opts.budget, "BI backward inductive"));
            if cert.kind == CheckKind::Check2 {
                match &cert.witness {
                    None => v.fail("witness", "missing"),
                    Some(w) => check_witness(ts, bi, w, &mut v),
                }
            } else {
                let Some(cd) = map(&cert.cdiamond, "Cdiamond", &mut v) else { return v };
                match &cert.init {
                    Some(x) if x.len() == ts.n_vars() => {
                        if !ts.theta_init.eval(x) || !cd.eval(ts.init, x) {
                            v.fail("initial configuration", format!("{x:?} is not an initial configuration inside Cdiamond"));
                        }
                    }
                    _ => v.fail("initial configuration", "missing"),
                }
                if let Err(e) = descend(cert, opts.descent_steps) {
                    v.fail("ranking descent", e);
                }
            }
            match &cert.reach {
                None => v.fail("reachability", "no run into the complement of BI"),
                Some(w) => check_reach(ts, bi, w, &mut v),
            }
        }
    }
    v
}

/// Bounded search for a reachable terminal configuration outside theta.
fn terminal_audit(cert: &Certificate, opts: &ValidateOptions, v: &mut Verdict) {
    let ts = &cert.system;
    if cert.theta.conjuncts.is_empty() {
        v.notes.push("theta is true; terminal coverage holds trivially".into());
        return;
    }
    let outside = match complement_predicate(&Predicate::single(cert.theta.clone())) {
        Ok(p) => p,
        Err(e) => {
            v.fail("terminal coverage", e.to_string());
            return;
        }
    };
    let mut target = PredicateMap::uniform(ts.n_locs(), Predicate::bottom());
    target.set(ts.terminal, outside);
    let q = ReachQuery {
        steps: 10_000,
        ndet: NdetBox::new(-16, 16),
        cap: opts.audit_cap,
        init_box: Some((opts.lo, opts.hi)),
        ..ReachQuery::new(ts, &target)
    };
    match bounded_reach(&q) {
        Ok((ReachResult::Found(w), _)) => {
            v.fail("terminal coverage", format!("reachable terminal configuration {}", show_config(ts, w.configs.last().unwrap())))
        }
        Ok(_) => v.notes.push(format!("terminal coverage audited on at most {} configurations", opts.audit_cap)),
        Err(e) => v.notes.push(format!("terminal coverage audit skipped: {e}")),
    }
}

fn check_witness(ts: &TransitionSystem, bi: &PredicateMap, w: &Witness, v: &mut Verdict) {
    if let Err(e) = replay(ts, w) {
        v.fail("witness", e);
        return;
    }
    let (a, b) = (&w.configs[0], w.configs.last().unwrap());
    if !bi.eval(a.loc, &a.vals) {
        v.fail("witness", format!("{} is not in BI", show_config(ts, a)));
    }
    if bi.eval(b.loc, &b.vals) {
        v.fail("witness", format!("{} is in BI", show_config(ts, b)));
    }
}

fn check_reach(ts: &TransitionSystem, bi: &PredicateMap, w: &Witness, v: &mut Verdict) {
    if let Err(e) = replay(ts, w) {
        v.fail("reachability", e);
        return;
    }
    let (a, b) = (&w.configs[0], w.configs.last().unwrap());
    if a.loc != ts.init || !ts.theta_init.eval(&a.vals) {
        v.fail("reachability", format!("{} is not initial", show_config(ts, a)));
    }
    if bi.eval(b.loc, &b.vals) {
        v.fail("reachability", format!("{} is in BI", show_config(ts, b)));
    }
}

/// Concrete successors along `transitions` with non-deterministic values in
/// `{-1, 0}`: one configuration sequence per choice.
fn branch_runs(ts: &TransitionSystem, plans: &[StepPlan], transitions: &[usize], start: &Configuration) -> Vec<Vec<Configuration>> {
    let mut runs = vec![vec![start.clone()]];
    for &t in transitions {
        let mut next = Vec::new();
        for run in runs {
            let last = run.last().unwrap();
            for vals in plans[t].post(&last.vals, NdetBox::new(-1, 0)) {
                let mut r = run.clone();
                r.push(Configuration { loc: ts.transitions[t].target, vals });
                next.push(r);
            }
        }
        runs = next;
    }
    runs
}

/// Follows the ranking function from the certificate's initial
/// configuration until leaving BI; returns the run.
pub fn descend(cert: &Certificate, max_steps: usize) -> Result<Witness, String> {
    let ts = &cert.system;
    let (Some(bi), Some(cd), Some(rank), Some(init)) = (&cert.bi, &cert.cdiamond, &cert.ranking, &cert.init) else {
        return Err("certificate lacks BI, Cdiamond, ranking or initial configuration".into());
    };
    let paths = cutpoint_paths(ts, &cert.cutpoints, PATH_CAP).map_err(|e| e.to_string())?;
    let plans: Vec<StepPlan> = ts.transitions.iter().map(|t| StepPlan::new(&t.relation, ts.n_vars())).collect();
    let f = |c: &Configuration| -> Result<i128, String> {
        rank.get(&c.loc)
            .ok_or_else(|| format!("no ranking function at {}", ts.locations[c.loc]))?
            .eval_i128(|v| c.vals[*v])
            .ok_or_else(|| "ranking value overflows".to_string())
    };
    let mut cur = Configuration { loc: ts.init, vals: init.clone() };
    let mut w = Witness { transitions: Vec::new(), configs: vec![cur.clone()] };
    let limit = (f(&cur)?.max(0) as u128 + 2).min(max_steps as u128) as usize;
    for _ in 0..limit {
        if !bi.eval(cur.loc, &cur.vals) {
            return Ok(w);
        }
        if !cd.eval(cur.loc, &cur.vals) {
            return Err(format!("{} left Cdiamond", show_config(ts, &cur)));
        }
        let fc = f(&cur)?;
        if fc < 0 {
            return Err(format!("ranking function negative at {}", show_config(ts, &cur)));
        }
        let mut step = None;
        'paths: for p in paths.iter().filter(|p| p.from == cur.loc) {
            for run in branch_runs(ts, &plans, &p.transitions, &cur) {
                let last = run.last().unwrap();
                if cd.eval(last.loc, &last.vals) && fc - f(last)? >= 1 {
                    step = Some((p.transitions.clone(), run));
                    break 'paths;
                }
            }
        }
        let Some((trans, run)) = step else {
            return Err(format!("no decreasing successor from {}", show_config(ts, &cur)));
        };
        w.transitions.extend(trans);
        w.configs.extend(run.into_iter().skip(1));
        cur = w.configs.last().unwrap().clone();
    }
    Err("ranking descent did not leave BI".into())
}
