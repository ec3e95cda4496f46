use std::path::Path;

use nonterm::cert::{parse_certificate, Certificate};
use nonterm::certcheck::{validate_certificate, ValidateOptions};
use nonterm::poly::Poly;
use nonterm::tsys::{Assertion, Predicate};

fn load(name: &str) -> Certificate {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    parse_certificate(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn wide() -> ValidateOptions {
    ValidateOptions { lo: -5, hi: 110, ..ValidateOptions::default() }
}

#[test]
fn hand_written_certificates_validate() {
    for n in ["nested-reset-backward.cert", "counter-gate-backward.cert", "counter-gate-branching-ranked.cert"] {
        let v = validate_certificate(&load(n), &wide());
        assert!(v.ok(), "{n}: {v}");
    }
}

#[test]
fn uniform_counter_range_is_not_a_forward_invariant() {
    // 0 <= n <= 100 at every location breaks at the increment when n = 100.
    let mut cert = load("counter-gate-backward.cert");
    let n = cert.system.var_index("n").unwrap();
    let range = Predicate::single(Assertion::new(vec![Poly::var(n), &Poly::constant(100) - &Poly::var(n)]));
    let it = cert.itilde.as_mut().unwrap();
    for l in 0..cert.system.n_locs() {
        it.set(l, range.clone());
    }
    let v = validate_certificate(&cert, &wide());
    assert!(v.has("Itilde inductive"), "{v}");
}

#[test]
fn weakened_backward_invariant_is_rejected() {
    let mut cert = load("nested-reset-backward.cert");
    let x = cert.system.var_index("x").unwrap();
    let l3 = cert.system.loc_index("l3").unwrap();
    let le9 = Predicate::single(Assertion::new(vec![&Poly::constant(9) - &Poly::var(x)]));
    cert.bi.as_mut().unwrap().set(l3, le9);
    let v = validate_certificate(&cert, &wide());
    assert!(v.has("BI backward inductive"), "{v}");
}

#[test]
fn ranking_that_does_not_decrease_is_rejected() {
    let mut cert = load("counter-gate-branching-ranked.cert");
    let l5 = cert.system.loc_index("l5").unwrap();
    cert.ranking.as_mut().unwrap().insert(l5, Poly::constant(1000));
    let v = validate_certificate(&cert, &wide());
    assert!(v.has("ranking descent"), "{v}");
}
