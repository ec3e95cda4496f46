//! The prover: template grid sweep, solving, reachability and validation.
//!
//! A `NO` answer is only reported for a certificate that passed
//! [`validate_certificate`]; anything else is `MAYBE`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cert::Certificate;
use crate::certcheck::{descend, validate_certificate, ValidateOptions};
use crate::encode::{
    encode_check1_with, encode_check2_with, encode_modified_with, CheckKind, ConstraintProblem, EncodeError, EncodeOptions,
    TemplateParams,
};
use crate::frontend::{lower, parse_program, remove_nondet_branching, FrontendError};
use crate::reach::{bounded_reach, ReachQuery, ReachResult, ReachStats};
use crate::solve::{extract_certificate, solve, SolveOutcome, SolverConfig};
use crate::tsys::{complement, parse_tsys, FormatError, NdetBox, TransitionSystem, TsysError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("program: {0}")]
    Program(#[from] FrontendError),
    #[error("transition system: {0}")]
    System(#[from] FormatError),
}

/// Parses a program, or a transition system if the text starts with
/// `(transition-system`.
pub fn load_system(text: &str) -> Result<TransitionSystem, LoadError> {
    if text.trim_start().starts_with("(transition-system") {
        return Ok(parse_tsys(text)?);
    }
    let ast = remove_nondet_branching(&parse_program(text)?);
    Ok(lower(&ast)?)
}

pub fn load_file(path: &Path) -> Result<TransitionSystem, LoadError> {
    load_system(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Check1,
    Check2,
    /// Check 1 over the whole grid, then Check 2.
    Both,
    Modified,
}

impl Mode {
    pub fn kinds(&self) -> Vec<CheckKind> {
        match self {
            Mode::Check1 => vec![CheckKind::Check1],
            Mode::Check2 => vec![CheckKind::Check2],
            Mode::Both => vec![CheckKind::Check1, CheckKind::Check2],
            Mode::Modified => vec![CheckKind::Modified],
        }
    }
}

/// Every `(c, d, D)` with `c <= max_c`, `d <= max_d`, `D <= max_deg`,
/// smallest templates first.
pub fn grid(max_c: usize, max_d: usize, max_deg: u32) -> Vec<TemplateParams> {
    let mut out = Vec::new();
    for c in 1..=max_c {
        for d in 1..=max_d {
            for deg in 0..=max_deg {
                out.push(TemplateParams { c, d, deg });
            }
        }
    }
    out.sort_by_key(|p| (p.c * p.d, p.deg, p.d, p.c));
    out
}

pub fn default_grid() -> Vec<TemplateParams> {
    grid(3, 2, 2)
}

#[derive(Clone, Debug)]
pub struct ReachOptions {
    pub steps: usize,
    pub cap: usize,
    pub ndet: NdetBox,
    /// Range for variables left unbounded by the initial condition.
    pub init_box: Option<(i128, i128)>,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions { steps: 10_000, cap: 1_000_000, ndet: NdetBox::new(-64, 63), init_box: Some((-16, 16)) }
    }
}

/// Valuation budget per implication while validating inside the prover.
/// Candidates needing more are rejected; `validate` uses the larger default.
pub const PROVE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug)]
pub struct ProveOptions {
    pub mode: Mode,
    pub grid: Vec<TemplateParams>,
    pub solver: SolverConfig,
    pub reach: ReachOptions,
    pub validate: ValidateOptions,
    /// Run grid configurations concurrently.
    pub parallel: bool,
    /// Try smaller template shapes inside each attempt first.
    pub shape_search: bool,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            mode: Mode::Both,
            grid: default_grid(),
            solver: SolverConfig::default(),
            reach: ReachOptions::default(),
            validate: ValidateOptions { budget: PROVE_BUDGET, ..ValidateOptions::default() },
            parallel: true,
            shape_search: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum AttemptStatus {
    Proved,
    Unsat,
    Unknown(String),
    Timeout,
    NotApplicable(String),
    ExtractFailed(String),
    ReachMissed(String),
    Invalid(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub check: &'static str,
    pub c: usize,
    pub d: usize,
    #[serde(rename = "D")]
    pub deg: u32,
    pub unknowns: usize,
    pub status: AttemptStatus,
    /// Smaller template shape the model was found in, if any.
    pub solved_as: Option<(usize, usize, u32)>,
    pub seconds: f64,
    #[serde(skip)]
    pub reach_stats: Option<ReachStats>,
    #[serde(skip)]
    pub certificate: Option<Box<Certificate>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Answer {
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "MAYBE")]
    Maybe,
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Answer::No => "NO",
            Answer::Maybe => "MAYBE",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProveReport {
    pub answer: Answer,
    /// Index into `attempts` of the proving attempt.
    pub proved_by: Option<usize>,
    pub attempts: Vec<Attempt>,
    pub seconds: f64,
}

impl ProveReport {
    pub fn certificate(&self) -> Option<&Certificate> {
        self.proved_by.and_then(|i| self.attempts[i].certificate.as_deref())
    }

    pub fn proving_attempt(&self) -> Option<&Attempt> {
        self.proved_by.map(|i| &self.attempts[i])
    }
}

/// Encoding gets the solver timeout as its own wall-clock budget.
fn encode(kind: CheckKind, ts: &TransitionSystem, p: TemplateParams, cfg: &SolverConfig) -> Result<ConstraintProblem, EncodeError> {
    let opts = EncodeOptions { multiplier_sort: cfg.multiplier_sort(), deadline: Some(Instant::now() + cfg.timeout) };
    match kind {
        CheckKind::Check1 => encode_check1_with(ts, p, opts),
        CheckKind::Check2 => encode_check2_with(ts, p, opts),
        CheckKind::Modified => encode_modified_with(ts, p, opts),
    }
}

/// Searches for a run into the complement of the certificate's BI and
/// stores it in the certificate.
pub fn find_reach(cert: &mut Certificate, opts: &ReachOptions) -> Result<ReachStats, String> {
    let bi = cert.bi.as_ref().ok_or("certificate has no BI")?;
    let target = complement(bi).map_err(|e: TsysError| e.to_string())?;
    let q = ReachQuery {
        steps: opts.steps,
        cap: opts.cap,
        ndet: opts.ndet,
        init_box: opts.init_box,
        ..ReachQuery::new(&cert.system, &target)
    };
    let (res, stats) = bounded_reach(&q).map_err(|e| e.to_string())?;
    match res {
        ReachResult::Found(w) => {
            cert.reach = Some(w);
            Ok(stats)
        }
        ReachResult::NotFoundWithinBounds => Err(format!("no run into the complement of BI within {} configurations", stats.explored)),
        ReachResult::Exhausted => Err("complement of BI is unreachable".into()),
    }
}

/// Shapes strictly inside `p`, smallest first.
fn sub_shapes(p: TemplateParams) -> Vec<TemplateParams> {
    grid(p.c, p.d, p.deg).into_iter().filter(|q| *q != p).collect()
}

fn finish_model(
    ts: &TransitionSystem,
    kind: CheckKind,
    problem: &ConstraintProblem,
    model: &crate::encode::Model,
    opts: &ProveOptions,
    a: &mut Attempt,
) -> AttemptStatus {
    let mut cert = match extract_certificate(problem, model, ts) {
        Ok(c) => c,
        Err(e) => return AttemptStatus::ExtractFailed(e.to_string()),
    };
    match kind {
        CheckKind::Check1 => {}
        CheckKind::Check2 => match find_reach(&mut cert, &opts.reach) {
            Ok(s) => a.reach_stats = Some(s),
            Err(e) => {
                a.certificate = Some(Box::new(cert));
                return AttemptStatus::ReachMissed(e);
            }
        },
        CheckKind::Modified => match descend(&cert, opts.validate.descent_steps) {
            Ok(w) => cert.reach = Some(w),
            Err(e) => {
                a.certificate = Some(Box::new(cert));
                return AttemptStatus::Invalid(e);
            }
        },
    }
    let verdict = validate_certificate(&cert, &opts.validate);
    a.certificate = Some(Box::new(cert));
    if verdict.ok() {
        AttemptStatus::Proved
    } else {
        AttemptStatus::Invalid(verdict.to_string())
    }
}

/// One check at one template size.
///
/// With `opts.shape_search`, the problem is first solved with the templates
/// pinned to each smaller shape (at a quarter of the timeout each), then
/// unrestricted.
pub fn attempt(ts: &TransitionSystem, kind: CheckKind, p: TemplateParams, opts: &ProveOptions) -> Attempt {
    let start = Instant::now();
    let mut a = Attempt {
        check: kind.name(),
        c: p.c,
        d: p.d,
        deg: p.deg,
        unknowns: 0,
        status: AttemptStatus::Unsat,
        solved_as: None,
        seconds: 0.0,
        reach_stats: None,
        certificate: None,
    };
    let finish = |mut a: Attempt, s: AttemptStatus| {
        a.status = s;
        a.seconds = start.elapsed().as_secs_f64();
        log::debug!("{} ({},{},{}): {:?} in {:.2}s", a.check, a.c, a.d, a.deg, a.status, a.seconds);
        a
    };
    let problem = match encode(kind, ts, p, &opts.solver) {
        Ok(pr) => pr,
        Err(EncodeError::Deadline) => return finish(a, AttemptStatus::Timeout),
        Err(e) => return finish(a, AttemptStatus::NotApplicable(e.to_string())),
    };
    a.unknowns = problem.unknowns.len();
    log::debug!("encoded {} unknowns, {} constraints in {:.2}s", a.unknowns, problem.constraints.len(), start.elapsed().as_secs_f64());
    if opts.shape_search {
        let cfg = SolverConfig { timeout: opts.solver.timeout / 4, ..opts.solver.clone() };
        for q in sub_shapes(p) {
            let mut pinned = problem.clone();
            pinned.constraints.extend(problem.shape_pins(q));
            if let SolveOutcome::Sat(m) = solve(&pinned, &cfg) {
                let s = finish_model(ts, kind, &problem, &m, opts, &mut a);
                if s == AttemptStatus::Proved {
                    a.solved_as = Some((q.c, q.d, q.deg));
                    return finish(a, s);
                }
                log::debug!("pinned shape {q:?}: {s:?}");
            }
        }
        a.certificate = None;
        a.reach_stats = None;
    }
    let model = match solve(&problem, &opts.solver) {
        SolveOutcome::Sat(m) => m,
        SolveOutcome::Unsat => return finish(a, AttemptStatus::Unsat),
        SolveOutcome::Unknown(s) => return finish(a, AttemptStatus::Unknown(s)),
        SolveOutcome::Timeout => return finish(a, AttemptStatus::Timeout),
    };
    let s = finish_model(ts, kind, &problem, &model, opts, &mut a);
    finish(a, s)
}

/// Runs the checks of `opts.mode` over `opts.grid` and stops at the first
/// validated certificate (in grid order).
pub fn prove(ts: &TransitionSystem, opts: &ProveOptions) -> ProveReport {
    let start = Instant::now();
    let mut attempts: Vec<Attempt> = Vec::new();
    let mut proved_by = None;
    for kind in opts.mode.kinds() {
        let batch: Vec<Attempt> = if opts.parallel {
            let mut found: Vec<Attempt> = Vec::new();
            // Chunks keep later, larger templates from starving the first ones.
            for chunk in opts.grid.chunks(rayon::current_num_threads().max(1)) {
                let res: Vec<Attempt> = chunk.par_iter().map(|p| attempt(ts, kind, *p, opts)).collect();
                let done = res.iter().any(|a| a.status == AttemptStatus::Proved);
                found.extend(res);
                if done {
                    break;
                }
            }
            found
        } else {
            let mut found = Vec::new();
            for p in &opts.grid {
                let a = attempt(ts, kind, *p, opts);
                let done = a.status == AttemptStatus::Proved;
                found.push(a);
                if done {
                    break;
                }
            }
            found
        };
        let base = attempts.len();
        let first = batch.iter().position(|a| a.status == AttemptStatus::Proved);
        attempts.extend(batch);
        if let Some(i) = first {
            proved_by = Some(base + i);
            break;
        }
    }
    ProveReport {
        answer: if proved_by.is_some() { Answer::No } else { Answer::Maybe },
        proved_by,
        attempts,
        seconds: start.elapsed().as_secs_f64(),
    }
}
