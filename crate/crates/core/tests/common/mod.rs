//! Random small transition systems whose steps never leave a box.
#![allow(dead_code)]

use nonterm::poly::Poly;
use nonterm::tsys::{Assertion, Predicate, PredicateMap, Transition, TransitionSystem, VarId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const LO: i64 = -2;
pub const HI: i64 = 2;

fn linear(rng: &mut ChaCha8Rng, vars: &[VarId]) -> Poly<VarId> {
    let mut p = Poly::constant(rng.gen_range(-2..=2));
    for &v in vars {
        let c: i64 = rng.gen_range(-1..=1);
        if c != 0 {
            p = &p + &Poly::var(v).scale(&c.into());
        }
    }
    p
}

/// `v' = e` as two inequalities.
fn assign(n: usize, v: VarId, e: &Poly<VarId>) -> [Poly<VarId>; 2] {
    let d = &Poly::var(v + n) - e;
    [d.clone(), -&d]
}

/// A system over `n` variables; every relation bounds the primed copies by
/// `[LO, HI]`, so every successor of an in-box configuration is in the box.
pub fn random_system(rng: &mut ChaCha8Rng) -> TransitionSystem {
    let n = rng.gen_range(1..=2);
    let n_locs = rng.gen_range(2..=4);
    let unprimed: Vec<VarId> = (0..n).collect();
    let mut transitions = Vec::new();
    for _ in 0..rng.gen_range(2..=6) {
        let source = rng.gen_range(0..n_locs);
        let target = rng.gen_range(0..n_locs);
        let mut rel = Vec::new();
        if rng.gen_bool(0.7) {
            rel.push(linear(rng, &unprimed));
        }
        for v in 0..n {
            let e = match rng.gen_range(0..5) {
                0 => Poly::var(v),
                1 => &Poly::var(v) + &Poly::constant(1),
                2 => &Poly::var(v) - &Poly::constant(1),
                3 => linear(rng, &unprimed),
                _ => {
                    // free choice, possibly guarded by a relation on v'
                    if rng.gen_bool(0.5) {
                        rel.push(&Poly::var(v + n) - &Poly::var(v));
                    }
                    rel.push(&Poly::var(v + n) - &Poly::constant(LO));
                    rel.push(&Poly::constant(HI) - &Poly::var(v + n));
                    continue;
                }
            };
            rel.extend(assign(n, v, &e));
            rel.push(&Poly::var(v + n) - &Poly::constant(LO));
            rel.push(&Poly::constant(HI) - &Poly::var(v + n));
        }
        transitions.push(Transition { source, target, relation: Assertion::new(rel), ndet_var: None });
    }
    TransitionSystem {
        vars: (0..n).map(|i| format!("v{i}")).collect(),
        locations: (0..n_locs).map(|i| format!("q{i}")).collect(),
        init: 0,
        terminal: n_locs - 1,
        theta_init: Assertion::top(),
        transitions,
    }
}

pub fn random_map(rng: &mut ChaCha8Rng, ts: &TransitionSystem) -> PredicateMap {
    let vars: Vec<VarId> = (0..ts.n_vars()).collect();
    let mut m = PredicateMap::uniform(ts.n_locs(), Predicate::top());
    for l in 0..ts.n_locs() {
        let disjuncts = (0..rng.gen_range(0..=2))
            .map(|_| Assertion::new((0..rng.gen_range(1..=2)).map(|_| linear(rng, &vars)).collect()))
            .collect();
        m.set(l, Predicate::new(disjuncts));
    }
    m
}
