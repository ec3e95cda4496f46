mod common;

use nonterm::certcheck::{is_inductive, reachability_relation, VarBox};
use nonterm::tsys::{complement, Assertion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn inductiveness_dualises_under_reversal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut yes, mut no) = (0, 0);
    for _ in 0..300 {
        let ts = common::random_system(&mut rng);
        let pm = common::random_map(&mut rng, &ts);
        let bx = VarBox::uniform(ts.n_vars(), common::LO.into(), common::HI.into());
        let fwd = is_inductive(&ts, &pm, &bx).ok();
        let bwd = is_inductive(&ts.reverse(&Assertion::top()), &complement(&pm).unwrap(), &bx).ok();
        assert_eq!(fwd, bwd);
        if fwd { yes += 1 } else { no += 1 }
    }
    // both outcomes occur, so the comparison is not vacuous
    assert!(yes > 10 && no > 10, "inductive {yes}, not inductive {no}");
}

#[test]
fn reversal_transposes_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let ts = common::random_system(&mut rng);
        let bx = VarBox::uniform(ts.n_vars(), common::LO.into(), common::HI.into());
        let f = reachability_relation(&ts, &bx);
        let r = reachability_relation(&ts.reverse(&Assertion::top()), &bx);
        for a in 0..f.len() {
            for b in 0..f.len() {
                assert_eq!(f[a][b], r[b][a]);
            }
        }
    }
}

#[test]
fn complement_is_exact_on_integers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let ts = common::random_system(&mut rng);
        let pm = common::random_map(&mut rng, &ts);
        let c = complement(&pm).unwrap();
        let bx = VarBox::uniform(ts.n_vars(), -4, 4);
        for x in bx.valuations() {
            for l in 0..ts.n_locs() {
                assert_ne!(pm.eval(l, &x), c.eval(l, &x));
            }
        }
    }
}
