//! Cutpoints and the simple paths between them.

use std::collections::BTreeMap;

use super::{EncodeError, SPoly, Sym};
use crate::poly::Poly;
use crate::tsys::{LocId, StepPlan, TransitionSystem};

/// Maximum number of simple paths per cutpoint pair.
pub const PATH_CAP: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub from: LocId,
    pub to: LocId,
    pub transitions: Vec<usize>,
}

/// Result of executing a path symbolically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathExec {
    pub post: Vec<SPoly>,
    /// Each must be `>= 0`.
    pub guards: Vec<SPoly>,
    /// Number of `Sym::Fresh` values introduced.
    pub n_fresh: usize,
    /// Intermediate states, one per location visited (including both ends).
    pub states: Vec<Vec<SPoly>>,
}

/// Initial location, terminal location and targets of DFS back edges.
pub fn loop_heads(ts: &TransitionSystem) -> Vec<LocId> {
    let n = ts.n_locs();
    let mut heads = vec![false; n];
    heads[ts.init] = true;
    heads[ts.terminal] = true;
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let succ: Vec<Vec<LocId>> = (0..n).map(|l| ts.outgoing(l).map(|(_, t)| t.target).collect()).collect();
    let roots = std::iter::once(ts.init).chain(0..n);
    for root in roots {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(LocId, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some((l, i)) = stack.pop() {
            if i < succ[l].len() {
                stack.push((l, i + 1));
                let t = succ[l][i];
                match state[t] {
                    0 => {
                        state[t] = 1;
                        stack.push((t, 0));
                    }
                    1 => heads[t] = true,
                    _ => {}
                }
            } else {
                state[l] = 2;
            }
        }
    }
    (0..n).filter(|l| heads[*l]).collect()
}

/// All simple paths from each cutpoint to the next cutpoints.
pub fn cutpoint_paths(ts: &TransitionSystem, cutpoints: &[LocId], cap: usize) -> Result<Vec<Path>, EncodeError> {
    let is_cut: Vec<bool> = (0..ts.n_locs()).map(|l| cutpoints.contains(&l)).collect();
    let mut out = Vec::new();
    for &c in cutpoints {
        let mut per_target: BTreeMap<LocId, usize> = BTreeMap::new();
        let mut stack: Vec<(LocId, Vec<usize>)> = vec![(c, Vec::new())];
        while let Some((l, trail)) = stack.pop() {
            let mut next: Vec<(LocId, Vec<usize>)> = Vec::new();
            for (i, t) in ts.outgoing(l) {
                let mut tr = trail.clone();
                tr.push(i);
                if is_cut[t.target] {
                    let k = per_target.entry(t.target).or_default();
                    *k += 1;
                    if *k > cap {
                        return Err(EncodeError::PathExplosion { cap });
                    }
                    out.push(Path { from: c, to: t.target, transitions: tr });
                } else if tr.len() > ts.n_locs() {
                    // A cycle avoiding every cutpoint.
                    return Err(EncodeError::PathExplosion { cap });
                } else {
                    next.push((t.target, tr));
                }
            }
            // Reverse so the DFS visits transitions in index order.
            stack.extend(next.into_iter().rev());
        }
    }
    out.sort_by(|a, b| (a.from, &a.transitions).cmp(&(b.from, &b.transitions)));
    Ok(out)
}

/// Loop-head cutpoints, or every location when paths explode.
pub fn choose_cutpoints(ts: &TransitionSystem, cap: usize) -> Result<(Vec<LocId>, Vec<Path>), EncodeError> {
    let heads = loop_heads(ts);
    match cutpoint_paths(ts, &heads, cap) {
        Ok(p) => Ok((heads, p)),
        Err(EncodeError::PathExplosion { .. }) => {
            log::info!("path cap exceeded, templating every location");
            let all: Vec<LocId> = (0..ts.n_locs()).collect();
            let p = cutpoint_paths(ts, &all, cap)?;
            Ok((all, p))
        }
        Err(e) => Err(e),
    }
}

impl Path {
    /// Symbolic execution from `X(0..n)`. Non-deterministic steps call
    /// `ndet(transition, state, k)` where `k` is the next fresh index; it
    /// returns the assigned value or `None` to use `Sym::Fresh(k)`.
    /// Returns `None` when some guard is a negative constant.
    pub fn exec(
        &self,
        ts: &TransitionSystem,
        plans: &[StepPlan],
        ndet: &mut impl FnMut(usize, &[SPoly], usize) -> Option<SPoly>,
    ) -> Option<PathExec> {
        let n = ts.n_vars();
        let mut state: Vec<SPoly> = (0..n).map(|v| Poly::var(Sym::X(v))).collect();
        let mut guards = Vec::new();
        let mut n_fresh = 0;
        let mut states = vec![state.clone()];
        for &ti in &self.transitions {
            let (post, gs) = plans[ti].apply(&state, &mut |_v| {
                let k = n_fresh;
                n_fresh += 1;
                ndet(ti, &state, k).unwrap_or_else(|| Poly::var(Sym::Fresh(k)))
            });
            for g in gs {
                if g.vars().is_empty() {
                    if g.is_negative_constant() {
                        return None;
                    }
                } else if !guards.contains(&g) {
                    guards.push(g);
                }
            }
            state = post;
            states.push(state.clone());
        }
        Some(PathExec { post: state, guards, n_fresh, states })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lower, parse_program};

    fn fig() -> TransitionSystem {
        let src = "var x, y\nwhile x >= 9 do x := ndet(); y := 10*x; while x <= y do x := x + 1 od od";
        lower(&parse_program(src).unwrap()).unwrap()
    }

    #[test]
    fn loop_heads_of_nested_loops() {
        let ts = fig();
        let names: Vec<&str> = loop_heads(&ts).iter().map(|l| ts.locations[*l].as_str()).collect();
        assert_eq!(names, vec!["l0", "l3", "out"]);
    }

    #[test]
    fn paths_cover_every_transition() {
        let ts = fig();
        let heads = loop_heads(&ts);
        let paths = cutpoint_paths(&ts, &heads, PATH_CAP).unwrap();
        let mut used: Vec<usize> = paths.iter().flat_map(|p| p.transitions.clone()).collect();
        used.sort();
        used.dedup();
        assert_eq!(used, (0..ts.transitions.len()).collect::<Vec<_>>());
    }

    #[test]
    fn symbolic_path_through_assignment() {
        let ts = fig();
        let plans: Vec<StepPlan> = ts.transitions.iter().map(|t| StepPlan::new(&t.relation, 2)).collect();
        let heads = loop_heads(&ts);
        let paths = cutpoint_paths(&ts, &heads, PATH_CAP).unwrap();
        let l0 = ts.loc_index("l0").unwrap();
        let l3 = ts.loc_index("l3").unwrap();
        let p = paths.iter().find(|p| p.from == l0 && p.to == l3).unwrap();
        let ex = p.exec(&ts, &plans, &mut |_, _, _| None).unwrap();
        assert_eq!(ex.n_fresh, 1);
        assert_eq!(ex.post[0], Poly::var(Sym::Fresh(0)));
        assert_eq!(ex.post[1], Poly::var(Sym::Fresh(0)).scale(&10.into()));
        // guard x >= 9 on the entry
        assert!(ex.guards.contains(&(&Poly::var(Sym::X(0)) - &Poly::constant(9))));
    }
}
