//! Explicit-state bounded reachability.
//!
//! Breadth-first search from the initial configurations, drawing values of
//! non-deterministic assignments from a box that widens between rounds.
//! A found path is replayed transition by transition before it is returned.

use std::collections::HashSet;

use thiserror::Error;

use crate::cert::Witness;
use crate::tsys::{normalize_conjunction, Assertion, Configuration, NdetBox, PredicateMap, Stepper, TransitionSystem};

#[derive(Clone, Debug)]
pub struct ReachQuery<'a> {
    pub system: &'a TransitionSystem,
    pub target: &'a PredicateMap,
    /// Maximum path length.
    pub steps: usize,
    /// Widest box for non-deterministic values.
    pub ndet: NdetBox,
    /// Maximum number of stored configurations per round.
    pub cap: usize,
    /// Range for variables that the initial condition leaves unbounded.
    pub init_box: Option<(i128, i128)>,
}

impl<'a> ReachQuery<'a> {
    pub fn new(system: &'a TransitionSystem, target: &'a PredicateMap) -> Self {
        ReachQuery { system, target, steps: 10_000, ndet: NdetBox::new(-64, 63), cap: 1_000_000, init_box: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachResult {
    Found(Witness),
    NotFoundWithinBounds,
    /// Every reachable configuration was explored.
    Exhausted,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReachStats {
    /// Configurations stored in the successful (or last) round.
    pub explored: usize,
    pub explored_total: usize,
    pub rounds: usize,
    pub ndet: Option<NdetBox>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReachError {
    #[error("initial condition leaves `{0}` unbounded and no initial box was given")]
    UnboundedTheta(String),
    #[error("initial box has {0} valuations, too many to enumerate")]
    InitTooLarge(u128),
}

/// Per-variable bounds implied by single-variable linear conjuncts.
/// `None` when the conjunction is unsatisfiable.
fn theta_bounds(ts: &TransitionSystem, theta: &Assertion) -> Option<Vec<(Option<i128>, Option<i128>)>> {
    use crate::poly::Monomial;
    use num_traits::ToPrimitive;
    let mut b = vec![(None, None); ts.n_vars()];
    let conj = normalize_conjunction(&theta.conjuncts)?;
    for p in conj {
        let vars = p.vars();
        if vars.len() != 1 || p.degree() != 1 {
            continue;
        }
        let v = *vars.iter().next().unwrap();
        let a = p.coeff(&Monomial::var(v));
        let c = p.constant_term();
        // After normalisation single-variable bounds have unit coefficient.
        if a == 1.into() {
            b[v].0 = (-c).to_i128();
        } else if a == (-1).into() {
            b[v].1 = c.to_i128();
        }
    }
    Some(b)
}

/// Enumerates initial valuations satisfying `theta`.
pub fn initial_valuations(
    ts: &TransitionSystem,
    init_box: Option<(i128, i128)>,
    limit: u128,
) -> Result<Vec<Vec<i128>>, ReachError> {
    let Some(bounds) = theta_bounds(ts, &ts.theta_init) else { return Ok(Vec::new()) };
    let mut ranges = Vec::new();
    for (v, (lo, hi)) in bounds.into_iter().enumerate() {
        let r = match (lo, hi, init_box) {
            (Some(l), Some(h), _) => (l, h),
            (l, h, Some((bl, bh))) => (l.unwrap_or(bl).max(bl), h.unwrap_or(bh).min(bh)),
            _ => return Err(ReachError::UnboundedTheta(ts.vars[v].clone())),
        };
        ranges.push(r);
    }
    let count: u128 = ranges.iter().map(|(l, h)| if h < l { 0 } else { (h - l + 1) as u128 }).product();
    if count > limit {
        return Err(ReachError::InitTooLarge(count));
    }
    let mut out = Vec::new();
    let mut cur: Vec<i128> = ranges.iter().map(|r| r.0).collect();
    if count == 0 {
        return Ok(out);
    }
    loop {
        if ts.theta_init.eval(&cur) {
            out.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == cur.len() {
                return Ok(out);
            }
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                break;
            }
            cur[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// The box sequence `[-1,1], [-4,4], [-16,16], ...` up to `max`.
fn widening(max: NdetBox) -> Vec<NdetBox> {
    let mut out = Vec::new();
    let mut w: i128 = 1;
    loop {
        let b = NdetBox::new((-w).max(max.lo), w.min(max.hi));
        if b.lo <= max.lo && b.hi >= max.hi {
            out.push(max);
            return out;
        }
        out.push(b);
        w *= 4;
    }
}

/// Checks that `w` is a run of `ts`: consecutive configurations related by
/// the named transitions.
pub fn replay(ts: &TransitionSystem, w: &Witness) -> Result<(), String> {
    if w.configs.len() != w.transitions.len() + 1 {
        return Err("length mismatch".into());
    }
    for (i, &t) in w.transitions.iter().enumerate() {
        let tr = ts.transitions.get(t).ok_or_else(|| format!("no transition {t}"))?;
        let (a, b) = (&w.configs[i], &w.configs[i + 1]);
        if tr.source != a.loc || tr.target != b.loc {
            return Err(format!("step {i}: transition {t} does not connect the locations"));
        }
        let mut full = a.vals.clone();
        full.extend(&b.vals);
        if !tr.relation.eval(&full) {
            return Err(format!("step {i}: relation of transition {t} violated"));
        }
    }
    Ok(())
}

fn search(
    q: &ReachQuery,
    stepper: &Stepper,
    starts: &[Vec<i128>],
    bx: NdetBox,
) -> (Option<Witness>, bool, usize) {
    let ts = q.system;
    // node -> (parent, transition, depth)
    let mut nodes: Vec<(Configuration, usize, usize, usize)> = Vec::new();
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut capped = false;
    let is_target = |c: &Configuration| q.target.eval(c.loc, &c.vals);
    let path_to = |nodes: &Vec<(Configuration, usize, usize, usize)>, mut i: usize| {
        let mut configs = Vec::new();
        let mut trans = Vec::new();
        loop {
            configs.push(nodes[i].0.clone());
            if nodes[i].1 == usize::MAX {
                break;
            }
            trans.push(nodes[i].2);
            i = nodes[i].1;
        }
        configs.reverse();
        trans.reverse();
        Witness { transitions: trans, configs }
    };
    for s in starts {
        let c = Configuration { loc: ts.init, vals: s.clone() };
        if seen.insert(c.clone()) {
            nodes.push((c, usize::MAX, 0, 0));
            if is_target(&nodes.last().unwrap().0) {
                return (Some(path_to(&nodes, nodes.len() - 1)), false, nodes.len());
            }
        }
    }
    let mut head = 0;
    while head < nodes.len() {
        let (cfg, _, _, depth) = nodes[head].clone();
        if depth >= q.steps {
            capped = true;
            head += 1;
            continue;
        }
        for (t, next) in stepper.successors(ts, &cfg, bx) {
            if seen.contains(&next) {
                continue;
            }
            if nodes.len() >= q.cap {
                return (None, true, nodes.len());
            }
            seen.insert(next.clone());
            let hit = is_target(&next);
            nodes.push((next, head, t, depth + 1));
            if hit {
                return (Some(path_to(&nodes, nodes.len() - 1)), capped, nodes.len());
            }
        }
        head += 1;
    }
    (None, capped, nodes.len())
}

/// Bounded breadth-first search for a configuration in `q.target`.
pub fn bounded_reach(q: &ReachQuery) -> Result<(ReachResult, ReachStats), ReachError> {
    let ts = q.system;
    let mut stats = ReachStats::default();
    if q.target.preds.iter().all(|p| p.disjuncts.is_empty()) {
        return Ok((ReachResult::Exhausted, stats));
    }
    let starts = initial_valuations(ts, q.init_box, q.cap as u128)?;
    let stepper = Stepper::new(ts);
    let has_free = stepper.plans.iter().any(|p| !p.free_vars().is_empty());
    let boxes = if has_free { widening(q.ndet) } else { vec![q.ndet] };
    for bx in boxes {
        stats.rounds += 1;
        let (found, capped, n) = search(q, &stepper, &starts, bx);
        stats.explored = n;
        stats.explored_total += n;
        stats.ndet = Some(bx);
        if let Some(w) = found {
            replay(ts, &w).expect("search produced an invalid path");
            let first = &w.configs[0];
            assert!(first.loc == ts.init && ts.theta_init.eval(&first.vals));
            return Ok((ReachResult::Found(w), stats));
        }
        if !capped && !has_free && q.init_box.is_none() {
            return Ok((ReachResult::Exhausted, stats));
        }
    }
    Ok((ReachResult::NotFoundWithinBounds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsys::{parse_tsys, Predicate};

    #[test]
    fn two_location_path() {
        let ts = parse_tsys(
            "(transition-system (vars x) (locations a out) (init a) (terminal out)
              (theta (>= x 0) (>= (- x) 0))
              (transition a out (>= (- x' x) 0) (>= (- x x') 0))
              (transition out out (>= (- x' x) 0) (>= (- x x') 0)))",
        )
        .unwrap();
        let mut target = PredicateMap::uniform(2, Predicate::bottom());
        target.set(1, Predicate::top());
        let (r, _) = bounded_reach(&ReachQuery::new(&ts, &target)).unwrap();
        match r {
            ReachResult::Found(w) => assert_eq!(w.configs.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_target_explores_nothing() {
        let ts = parse_tsys("(transition-system (vars x) (locations a) (init a) (terminal a) (theta))").unwrap();
        let target = PredicateMap::uniform(1, Predicate::bottom());
        let (r, s) = bounded_reach(&ReachQuery::new(&ts, &target)).unwrap();
        assert_eq!(r, ReachResult::Exhausted);
        assert_eq!(s.explored_total, 0);
    }

    #[test]
    fn unbounded_theta_needs_a_box() {
        let ts = parse_tsys("(transition-system (vars x) (locations a) (init a) (terminal a) (theta))").unwrap();
        let target = PredicateMap::uniform(1, Predicate::top());
        assert!(matches!(bounded_reach(&ReachQuery::new(&ts, &target)), Err(ReachError::UnboundedTheta(_))));
        let q = ReachQuery { init_box: Some((0, 3)), ..ReachQuery::new(&ts, &target) };
        assert!(matches!(bounded_reach(&q).unwrap().0, ReachResult::Found(_)));
    }

    #[test]
    fn widening_sequence() {
        let b = widening(NdetBox::new(-64, 63));
        assert_eq!(b.first(), Some(&NdetBox::new(-1, 1)));
        assert_eq!(b.last(), Some(&NdetBox::new(-64, 63)));
        assert_eq!(b.len(), 4);
    }
}
