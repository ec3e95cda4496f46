//! One pass/fail line per acceptance criterion.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nonterm::cert::{parse_certificate, Certificate};
use nonterm::certcheck::{
    brute_force_nonterm, is_inductive, reachability_relation, run_deterministic, validate_certificate, BruteResult,
    RunOutcome, ValidateOptions, VarBox,
};
use nonterm::corpus::{corpus_files, read_label, Label};
use nonterm::encode::TemplateParams;
use nonterm::prove::{default_grid, grid, load_file, prove, Answer, Mode, ProveOptions, ProveReport};
use nonterm::solve::SolverConfig;
use nonterm::tsys::{complement, Assertion, Configuration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn program(dir: &str, name: &str) -> PathBuf {
    root().join("corpus").join(dir).join(name)
}

fn opts(mode: Mode, grid: Vec<TemplateParams>, timeout: u64) -> ProveOptions {
    ProveOptions {
        mode,
        grid,
        solver: SolverConfig { timeout: Duration::from_secs(timeout), ..SolverConfig::default() },
        ..ProveOptions::default()
    }
}

fn single(c: usize, d: usize, deg: u32) -> Vec<TemplateParams> {
    vec![TemplateParams::new(c, d, deg).unwrap()]
}

fn validates(cert: &Certificate) -> bool {
    validate_certificate(cert, &ValidateOptions::default()).ok()
}

struct Gate {
    failed: Vec<usize>,
}

impl Gate {
    fn report(&mut self, n: usize, ok: bool, detail: String) {
        println!("criterion {n}: {} - {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }
}

fn proved(r: &ProveReport) -> bool {
    r.answer == Answer::No && r.certificate().is_some_and(validates)
}

fn nested_reset(g: &mut Gate) {
    let ts = load_file(&program("bundled", "nested-reset.prog")).unwrap();
    let t = Instant::now();
    let r = prove(&ts, &opts(Mode::Check1, single(1, 1, 0), 60));
    let secs = t.elapsed().as_secs_f64();
    g.report(1, proved(&r) && secs < 10.0, format!("nested reset, check 1 (1,1,0): {} in {secs:.2}s", r.answer));
}

fn counter_gate(g: &mut Gate) {
    let ts = load_file(&program("bundled", "counter-gate.prog")).unwrap();
    let t = Instant::now();
    let sweep = prove(&ts, &ProveOptions { parallel: false, ..opts(Mode::Check1, grid(3, 2, 2), 10) });
    let maybe_everywhere = sweep.answer == Answer::Maybe && sweep.attempts.len() == 18;
    let sweep_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let r = prove(&ts, &ProveOptions { shape_search: true, ..opts(Mode::Check2, single(2, 2, 0), 60) });
    let secs = t.elapsed().as_secs_f64();
    let at = r.proving_attempt();
    let explored = at.and_then(|a| a.reach_stats.as_ref()).map(|s| s.explored).unwrap_or(usize::MAX);
    let l1 = ts.loc_index("l1").unwrap();
    let passes_gate = r
        .certificate()
        .and_then(|c| c.reach.as_ref())
        .is_some_and(|w| w.configs.iter().any(|c| c.loc == l1 && c.vals == [99, 0, 0]));
    let ok = maybe_everywhere && proved(&r) && explored <= 10_000 && passes_gate && secs < 120.0;
    g.report(
        2,
        ok,
        format!(
            "counter gate, check 1 sweep: {} over {} configurations in {sweep_secs:.0}s; check 2 (2,2,0): {} in {secs:.2}s, \
             reach explored {explored}, run through (l1, 99, 0, 0): {passes_gate}{}",
            sweep.answer,
            sweep.attempts.len(),
            r.answer,
            at.and_then(|a| a.solved_as).map(|s| format!(", model in shape {s:?}")).unwrap_or_default()
        ),
    );
}

fn decimal_growth(g: &mut Gate) {
    let ts = load_file(&program("bundled", "decimal-growth.prog")).unwrap();
    let r = prove(&ts, &opts(Mode::Check1, single(1, 1, 0), 60));
    let u = r.certificate().map(|c| c.restricted().unwrap()).unwrap_or_else(|| ts.clone());
    let run = run_deterministic(&u, Configuration { loc: u.init, vals: vec![1, 1] }, 10_000);
    g.report(
        3,
        proved(&r) && run == RunOutcome::Horizon,
        format!("decimal growth, check 1 (1,1,0): {}; run from (1,1) over 10^4 steps: {run:?}", r.answer),
    );
}

fn duality(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t = Instant::now();
    let (mut agree, n) = (0, 1000);
    for _ in 0..n {
        let ts = common::random_system(&mut rng);
        let pm = common::random_map(&mut rng, &ts);
        let bx = VarBox::uniform(ts.n_vars(), common::LO.into(), common::HI.into());
        let fwd = is_inductive(&ts, &pm, &bx).ok();
        let bwd = is_inductive(&ts.reverse(&Assertion::top()), &complement(&pm).unwrap(), &bx).ok();
        agree += usize::from(fwd == bwd);
    }
    let secs = t.elapsed().as_secs_f64();
    g.report(4, agree == n && secs < 60.0, format!("duality on {agree}/{n} random systems in {secs:.2}s"));
}

fn reach_symmetry(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(4048);
    let (mut agree, n) = (0, 500);
    for _ in 0..n {
        let ts = common::random_system(&mut rng);
        let bx = VarBox::uniform(ts.n_vars(), common::LO.into(), common::HI.into());
        let f = reachability_relation(&ts, &bx);
        let r = reachability_relation(&ts.reverse(&Assertion::top()), &bx);
        agree += usize::from((0..f.len()).all(|a| (0..f.len()).all(|b| f[a][b] == r[b][a])));
    }
    g.report(5, agree == n, format!("reachability transposed on {agree}/{n} random systems"));
}

fn labelled_corpus(g: &mut Gate) {
    let files = corpus_files(&root().join("corpus/labelled")).unwrap();
    let (mut nt, mut t, mut unsound, mut invalid, mut unverified, mut no) = (0, 0, Vec::new(), Vec::new(), Vec::new(), 0);
    let o = opts(Mode::Both, default_grid(), 3);
    for f in &files {
        let name = f.file_stem().unwrap().to_string_lossy().into_owned();
        let ts = load_file(f).unwrap();
        let label = read_label(f);
        match label {
            Some(Label::NonTerminating) => nt += 1,
            Some(Label::Terminating) => {
                t += 1;
                let bx = VarBox::uniform(ts.n_vars(), -3, 11);
                if !matches!(brute_force_nonterm(&ts, &bx, 5_000_000), BruteResult::AllTerminate) {
                    unverified.push(name.clone());
                }
            }
            None => unverified.push(name.clone()),
        }
        let r = prove(&ts, &o);
        if r.answer == Answer::No {
            no += 1;
            if label == Some(Label::Terminating) {
                unsound.push(name.clone());
            }
            if !r.certificate().is_some_and(validates) {
                invalid.push(name.clone());
            }
        }
        println!("  {name}: {:?} -> {}", label, r.answer);
    }
    let ok = files.len() == 20 && nt == 10 && t == 10 && unsound.is_empty() && invalid.is_empty() && unverified.is_empty();
    g.report(
        6,
        ok,
        format!(
            "{} programs ({nt} NT, {t} T), {no} NO; NO on T: {unsound:?}; invalid certificates: {invalid:?}; \
             T not confirmed by brute force: {unverified:?}",
            files.len()
        ),
    );
}

fn golden(g: &mut Gate) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let names = ["nested-reset-backward.cert", "counter-gate-backward.cert", "counter-gate-branching-ranked.cert"];
    let mut lines = Vec::new();
    let mut ok = true;
    for n in names {
        let cert = parse_certificate(&std::fs::read_to_string(dir.join(n)).unwrap()).unwrap();
        let t = Instant::now();
        let v = validate_certificate(&cert, &ValidateOptions { lo: -5, hi: 110, ..ValidateOptions::default() });
        let secs = t.elapsed().as_secs_f64();
        ok &= v.ok() && secs < 30.0;
        lines.push(format!("{n}: {} in {secs:.2}s", if v.ok() { "ok" } else { "rejected" }));
        if !v.ok() {
            println!("{v}");
        }
    }
    g.report(7, ok, lines.join("; "));
}

fn bundled_within_grid(g: &mut Gate) {
    let files = corpus_files(&root().join("corpus/bundled")).unwrap();
    let mut lines = Vec::new();
    let mut ok = !files.is_empty();
    for f in &files {
        let ts = load_file(f).unwrap();
        let r = prove(&ts, &opts(Mode::Both, default_grid(), 3));
        let within = r.proving_attempt().is_some_and(|a| a.c <= 3 && a.d <= 2 && a.deg <= 2);
        ok &= r.answer == Answer::No && within && r.certificate().is_some_and(validates);
        let by = r.proving_attempt().map(|a| format!("{} ({},{},{})", a.check, a.c, a.d, a.deg)).unwrap_or_default();
        lines.push(format!("{}: {} {by}", f.file_stem().unwrap().to_string_lossy(), r.answer));
    }
    g.report(8, ok, lines.join("; "));
}

#[test]
fn acceptance() {
    let mut g = Gate { failed: Vec::new() };
    nested_reset(&mut g);
    counter_gate(&mut g);
    decimal_growth(&mut g);
    duality(&mut g);
    reach_symmetry(&mut g);
    labelled_corpus(&mut g);
    golden(&mut g);
    bundled_within_grid(&mut g);
    assert!(g.failed.is_empty(), "failed criteria: {:?}", g.failed);
}
