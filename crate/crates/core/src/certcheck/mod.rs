//! Independent checking by enumeration over finite boxes.
//!
//! Nothing here trusts the solver: certificates are re-checked on concrete
//! integer valuations, and the brute-force oracle explores state spaces
//! directly. Location-level checks consider only steps whose both ends lie
//! in the box; certificate checks run per cutpoint path with only the
//! variables that matter enumerated.

mod cut;
mod validate;

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::tsys::{Configuration, NdetBox, PredicateMap, Stepper, TransitionSystem};

pub use cut::{is_inductive_cut, CompiledPred, Direction};
pub use validate::{descend, validate_certificate, ValidateOptions};

/// Per-variable inclusive ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarBox {
    pub ranges: Vec<(i128, i128)>,
}

impl VarBox {
    pub fn uniform(n: usize, lo: i128, hi: i128) -> Self {
        assert!(lo <= hi, "empty box");
        VarBox { ranges: vec![(lo, hi); n] }
    }

    pub fn contains(&self, vals: &[i128]) -> bool {
        vals.iter().zip(&self.ranges).all(|(v, (l, h))| l <= v && v <= h)
    }

    /// Smallest range covering every variable's range.
    pub fn span(&self) -> NdetBox {
        let lo = self.ranges.iter().map(|r| r.0).min().unwrap_or(0);
        let hi = self.ranges.iter().map(|r| r.1).max().unwrap_or(0);
        NdetBox::new(lo, hi)
    }

    pub fn size(&self) -> u128 {
        self.ranges.iter().map(|(l, h)| (h - l + 1) as u128).product()
    }

    /// All valuations, first variable fastest.
    pub fn valuations(&self) -> Vec<Vec<i128>> {
        let mut out = Vec::new();
        let mut cur: Vec<i128> = self.ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return out;
                }
                if cur[i] < self.ranges[i].1 {
                    cur[i] += 1;
                    break;
                }
                cur[i] = self.ranges[i].0;
                i += 1;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    /// Checks that were skipped or only partially performed.
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fail(&mut self, condition: &str, detail: impl Into<String>) {
        self.violations.push(Violation { condition: condition.to_string(), detail: detail.into() });
    }

    pub fn merge(&mut self, other: Verdict) {
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }

    pub fn has(&self, condition: &str) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")?;
        } else {
            write!(f, "{} violation(s)", self.violations.len())?;
            for v in &self.violations {
                write!(f, "\n  {}: {}", v.condition, v.detail)?;
            }
        }
        for n in &self.notes {
            write!(f, "\n  note: {n}")?;
        }
        Ok(())
    }
}

pub(crate) fn show_config(ts: &TransitionSystem, c: &Configuration) -> String {
    let vals: Vec<String> = c.vals.iter().map(|v| v.to_string()).collect();
    format!("({}, {})", ts.locations[c.loc], vals.join(", "))
}

/// In-box successors of an in-box configuration.
fn box_successors(ts: &TransitionSystem, st: &Stepper, c: &Configuration, bx: &VarBox) -> Vec<Configuration> {
    st.successors(ts, c, bx.span()).into_iter().map(|(_, s)| s).filter(|s| bx.contains(&s.vals)).collect()
}

/// Every step between in-box configurations preserves `pm`.
pub fn is_inductive(ts: &TransitionSystem, pm: &PredicateMap, bx: &VarBox) -> Verdict {
    let st = Stepper::new(ts);
    let mut v = Verdict::default();
    for vals in bx.valuations() {
        for loc in 0..ts.n_locs() {
            if !pm.eval(loc, &vals) {
                continue;
            }
            let c = Configuration { loc, vals: vals.clone() };
            for s in box_successors(ts, &st, &c, bx) {
                if !pm.eval(s.loc, &s.vals) {
                    v.fail("inductiveness", format!("{} -> {}", show_config(ts, &c), show_config(ts, &s)));
                    return v;
                }
            }
        }
    }
    v
}

/// `u` is a sub-relation of `ts` that keeps a successor wherever `ts` has one.
pub fn is_proper_underapprox(ts: &TransitionSystem, u: &TransitionSystem, bx: &VarBox) -> Verdict {
    let st = Stepper::new(ts);
    let su = Stepper::new(u);
    let mut v = Verdict::default();
    for vals in bx.valuations() {
        for loc in 0..ts.n_locs() {
            let c = Configuration { loc, vals: vals.clone() };
            let full: HashSet<Configuration> = box_successors(ts, &st, &c, bx).into_iter().collect();
            let sub = box_successors(u, &su, &c, bx);
            if let Some(extra) = sub.iter().find(|s| !full.contains(s)) {
                v.fail("sub-relation", format!("{} -> {}", show_config(ts, &c), show_config(ts, extra)));
                return v;
            }
            if !full.is_empty() && sub.is_empty() {
                v.fail("successor preservation", format!("{} has a successor only in the full system", show_config(ts, &c)));
                return v;
            }
        }
    }
    v
}

/// Closed recurrence set: contains an initial configuration, no terminal
/// configuration, and every member has successors, all of them members.
/// Members are enumerated in the box; their successors are checked against
/// the predicate wherever they land.
pub fn check_closed_recurrence(u: &TransitionSystem, set: &PredicateMap, bx: &VarBox) -> Verdict {
    let st = Stepper::new(u);
    let mut v = Verdict::default();
    let vals_all = bx.valuations();
    if !vals_all.iter().any(|x| u.theta_init.eval(x) && set.eval(u.init, x)) {
        v.fail("contains initial configuration", "no initial configuration of the box is in the set");
    }
    if let Some(x) = vals_all.iter().find(|x| set.eval(u.terminal, x)) {
        v.fail("no terminal configurations", show_config(u, &Configuration { loc: u.terminal, vals: x.clone() }));
    }
    for x in &vals_all {
        for loc in 0..u.n_locs() {
            if loc == u.terminal || !set.eval(loc, x) {
                continue;
            }
            let c = Configuration { loc, vals: x.clone() };
            let succ = st.successors(u, &c, bx.span());
            if succ.is_empty() {
                v.fail("has successor", show_config(u, &c));
                return v;
            }
            if let Some((_, s)) = succ.iter().find(|(_, s)| !set.eval(s.loc, &s.vals)) {
                v.fail("closed", format!("{} -> {}", show_config(u, &c), show_config(u, s)));
                return v;
            }
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteResult {
    /// A run from an initial configuration that revisits a configuration:
    /// `prefix` leads to `cycle[0]`, and `cycle` returns to it.
    NonterminatingWitness { prefix: Vec<Configuration>, cycle: Vec<Configuration> },
    AllTerminate,
    Inconclusive(String),
}

/// Explores every run from the boxed initial configurations with
/// non-deterministic values drawn from the box. A cycle avoiding the
/// terminal location is a lasso; if all runs reach the terminal location
/// without leaving the box the system terminates on the box.
pub fn brute_force_nonterm(ts: &TransitionSystem, bx: &VarBox, horizon: usize) -> BruteResult {
    let st = Stepper::new(ts);
    // 1 = on the DFS stack, 2 = finished (all runs from it terminate)
    let mut color: HashMap<Configuration, u8> = HashMap::new();
    let mut incomplete: Option<String> = None;
    for x in bx.valuations() {
        if !ts.theta_init.eval(&x) {
            continue;
        }
        let root = Configuration { loc: ts.init, vals: x };
        if color.contains_key(&root) {
            continue;
        }
        let mut stack: Vec<(Configuration, Vec<Configuration>, usize)> = Vec::new();
        let succ = |c: &Configuration| -> Vec<Configuration> {
            if c.loc == ts.terminal {
                return Vec::new();
            }
            st.successors(ts, c, bx.span()).into_iter().map(|(_, s)| s).collect()
        };
        color.insert(root.clone(), 1);
        let s0 = succ(&root);
        if s0.is_empty() && root.loc != ts.terminal {
            incomplete.get_or_insert_with(|| format!("blocked at {}", show_config(ts, &root)));
        }
        stack.push((root, s0, 0));
        while let Some((c, ss, i)) = stack.pop() {
            if i == ss.len() {
                color.insert(c, 2);
                continue;
            }
            let next = ss[i].clone();
            stack.push((c, ss, i + 1));
            match color.get(&next) {
                Some(1) => {
                    let pos = stack.iter().position(|(d, _, _)| *d == next).unwrap();
                    let prefix = stack[..pos].iter().map(|(d, _, _)| d.clone()).collect();
                    let cycle = stack[pos..].iter().map(|(d, _, _)| d.clone()).collect();
                    return BruteResult::NonterminatingWitness { prefix, cycle };
                }
                Some(_) => continue,
                None => {}
            }
            if !bx.contains(&next.vals) {
                incomplete.get_or_insert_with(|| format!("left the box at {}", show_config(ts, &next)));
                color.insert(next, 2);
                continue;
            }
            if color.len() >= horizon {
                return BruteResult::Inconclusive(format!("more than {horizon} configurations"));
            }
            let s = succ(&next);
            if s.is_empty() && next.loc != ts.terminal {
                incomplete.get_or_insert_with(|| format!("blocked at {}", show_config(ts, &next)));
            }
            color.insert(next.clone(), 1);
            stack.push((next, s, 0));
        }
    }
    match incomplete {
        Some(r) => BruteResult::Inconclusive(r),
        None => BruteResult::AllTerminate,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Terminates { steps: usize },
    /// Configuration at `first` is revisited at `second`.
    Lasso { first: usize, second: usize },
    Horizon,
    Blocked { steps: usize },
    NonDeterministic { steps: usize },
}

/// Follows the unique run of a deterministic system for `horizon` steps.
pub fn run_deterministic(ts: &TransitionSystem, start: Configuration, horizon: usize) -> RunOutcome {
    let st = Stepper::new(ts);
    let mut seen: HashMap<Configuration, usize> = HashMap::new();
    let mut c = start;
    for step in 0..=horizon {
        if c.loc == ts.terminal {
            return RunOutcome::Terminates { steps: step };
        }
        if let Some(&first) = seen.get(&c) {
            return RunOutcome::Lasso { first, second: step };
        }
        seen.insert(c.clone(), step);
        if step == horizon {
            break;
        }
        let mut succ = st.successors(ts, &c, NdetBox::new(0, 0));
        if st.plans.iter().any(|p| !p.free_vars().is_empty()) {
            return RunOutcome::NonDeterministic { steps: step };
        }
        match succ.len() {
            0 => return RunOutcome::Blocked { steps: step },
            1 => c = succ.pop().unwrap().1,
            _ => return RunOutcome::NonDeterministic { steps: step },
        }
    }
    RunOutcome::Horizon
}

/// Pairs `(a, b)` of in-box configurations with `b` reachable from `a`
/// through in-box configurations; indices are `loc * |box| + valuation`.
pub fn reachability_relation(ts: &TransitionSystem, bx: &VarBox) -> Vec<Vec<bool>> {
    let vals = bx.valuations();
    let idx: HashMap<Vec<i128>, usize> = vals.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let nv = vals.len();
    let n = ts.n_locs() * nv;
    let st = Stepper::new(ts);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for loc in 0..ts.n_locs() {
        for (i, x) in vals.iter().enumerate() {
            let c = Configuration { loc, vals: x.clone() };
            for s in box_successors(ts, &st, &c, bx) {
                adj[loc * nv + i].push(s.loc * nv + idx[&s.vals]);
            }
        }
    }
    let mut out = vec![vec![false; n]; n];
    for a in 0..n {
        let mut stack = vec![a];
        out[a][a] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !out[a][w] {
                    out[a][w] = true;
                    stack.push(w);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lower, parse_program};
    use crate::poly::Poly;
    use crate::tsys::{Assertion, Predicate, Resolution};

    fn fig() -> TransitionSystem {
        let src = "var x, y\nwhile x >= 9 do x := ndet(); y := 10*x; while x <= y do x := x + 1 od od";
        lower(&parse_program(src).unwrap()).unwrap()
    }

    fn restricted(ts: &TransitionSystem, r: i64) -> TransitionSystem {
        let mut res = Resolution::new();
        res.insert(ts.ndet_transitions()[0], Poly::constant(r));
        ts.restrict(&res).unwrap()
    }

    fn ge9(ts: &TransitionSystem) -> PredicateMap {
        let mut pm = PredicateMap::uniform(ts.n_locs(), Predicate::single(Assertion::new(vec![&Poly::var(0) - &Poly::constant(9)])));
        pm.set(ts.terminal, Predicate::bottom());
        pm
    }

    #[test]
    fn invariant_of_restricted_system() {
        let ts = fig();
        let bx = VarBox::uniform(2, 0, 40);
        assert!(is_inductive(&restricted(&ts, 9), &ge9(&ts), &bx).ok());
        let v = is_inductive(&ts, &ge9(&ts), &VarBox::uniform(2, 0, 10));
        assert!(!v.ok());
        assert!(v.violations[0].detail.starts_with("(l1, 9"), "{v}");
    }

    #[test]
    fn under_approximation() {
        let ts = fig();
        let bx = VarBox::uniform(2, 0, 12);
        assert!(is_proper_underapprox(&ts, &restricted(&ts, 9), &bx).ok());
        assert!(is_proper_underapprox(&ts, &ts, &bx).ok());
        let mut cut = ts.clone();
        cut.transitions.remove(0);
        let v = is_proper_underapprox(&ts, &cut, &bx);
        assert!(v.has("successor preservation"), "{v}");
    }

    #[test]
    fn recurrence_set() {
        let ts = fig();
        let u = restricted(&ts, 9);
        let bx = VarBox::uniform(2, 0, 32);
        assert!(check_closed_recurrence(&u, &ge9(&ts), &bx).ok());
        let empty = PredicateMap::uniform(ts.n_locs(), Predicate::bottom());
        assert!(check_closed_recurrence(&u, &empty, &bx).has("contains initial configuration"));
        let mut with_out = ge9(&ts);
        with_out.set(ts.terminal, Predicate::top());
        assert!(check_closed_recurrence(&u, &with_out, &bx).has("no terminal configurations"));
    }

    #[test]
    fn brute_force_oracle() {
        let ts = fig();
        let bx = VarBox::uniform(2, 0, 12);
        assert_eq!(brute_force_nonterm(&restricted(&ts, 0), &bx, 1_000_000), BruteResult::AllTerminate);
        let start = Configuration { loc: ts.init, vals: vec![9, 0] };
        assert!(matches!(run_deterministic(&restricted(&ts, 9), start, 10_000), RunOutcome::Lasso { .. }));
    }
}
