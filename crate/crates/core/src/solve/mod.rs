//! Solver plumbing: SMT-LIB emission, an external solver process with a
//! wall-clock limit, model parsing, and instantiation of templates.

mod emit;
mod extract;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::encode::{ConstraintProblem, Model, ModelValue, Sort};
use crate::sexpr::{parse_all, Sexp};

pub use emit::{emit, symbol};
pub use extract::{extract_certificate, instantiate, ExtractError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub executable: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Empty for no `set-logic` line.
    pub logic: String,
    /// Encode Farkas multipliers as integers (for solvers that reject
    /// mixed integer/real problems).
    pub int_multipliers: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            executable: PathBuf::from("z3"),
            args: vec!["-in".into()],
            timeout: Duration::from_secs(60),
            logic: "QF_NIRA".into(),
            int_multipliers: false,
        }
    }
}

impl SolverConfig {
    pub fn multiplier_sort(&self) -> Sort {
        if self.int_multipliers {
            Sort::Int
        } else {
            Sort::Real
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    Unknown(String),
    Timeout,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unparsable solver output: {0}")]
    Syntax(String),
    #[error("solver returned no value for `{0}`")]
    Missing(String),
    #[error("bad value `{1}` for `{0}`")]
    BadValue(String, String),
}

/// Runs the solver on `text` and returns its stdout, or `None` on timeout.
fn run(text: &str, cfg: &SolverConfig) -> Result<Option<(String, String)>, String> {
    let mut child = Command::new(&cfg.executable)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start {}: {e}", cfg.executable.display()))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = text.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let status = child.wait_timeout(cfg.timeout).map_err(|e| e.to_string())?;
    if status.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        let _ = writer.join();
        return Ok(None);
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    Ok(Some((out, err)))
}

pub fn solve(problem: &ConstraintProblem, cfg: &SolverConfig) -> SolveOutcome {
    let t = std::time::Instant::now();
    let text = emit(problem, &cfg.logic);
    log::debug!("emitted {} bytes in {:.2}s", text.len(), t.elapsed().as_secs_f64());
    let (out, err) = match run(&text, cfg) {
        Ok(Some(o)) => o,
        Ok(None) => return SolveOutcome::Timeout,
        Err(e) => return SolveOutcome::Unknown(e),
    };
    let verdict = out.split_whitespace().next().unwrap_or("");
    match verdict {
        "sat" => match parse_model(&out, problem) {
            Ok(m) => SolveOutcome::Sat(m),
            Err(e) => SolveOutcome::Unknown(format!("{e}; stderr: {}", err.trim())),
        },
        "unsat" => SolveOutcome::Unsat,
        "timeout" => SolveOutcome::Timeout,
        _ => SolveOutcome::Unknown(format!("{} {}", out.trim(), err.trim()).trim().to_string()),
    }
}

/// Solver version string, for reports.
pub fn solver_version(cfg: &SolverConfig) -> Option<String> {
    let out = Command::new(&cfg.executable).arg("--version").output().ok()?;
    Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn parse_number(s: &Sexp) -> Option<BigRational> {
    match s {
        Sexp::Atom(a) => {
            if let Some((i, f)) = a.split_once('.') {
                let digits = format!("{i}{f}");
                let num: BigInt = digits.parse().ok()?;
                let den = num_traits::pow(BigInt::from(10), f.len());
                Some(BigRational::new(num, den))
            } else {
                Some(BigRational::from_integer(a.parse().ok()?))
            }
        }
        Sexp::List(l) => match (l.first()?.as_atom()?, l.len()) {
            ("-", 2) => Some(-parse_number(&l[1])?),
            ("-", 3) => Some(parse_number(&l[1])? - parse_number(&l[2])?),
            ("/", 3) => {
                let d = parse_number(&l[2])?;
                if d == BigRational::from_integer(0.into()) {
                    return None;
                }
                Some(parse_number(&l[1])? / d)
            }
            ("to_real", 2) => parse_number(&l[1]),
            _ => None,
        },
    }
}

/// Parses `sat` followed by a `get-value` answer. Integer and Boolean
/// unknowns must be present; real values that are not rational numbers
/// (algebraic roots) are skipped.
pub fn parse_model(out: &str, problem: &ConstraintProblem) -> Result<Model, ModelError> {
    let items = parse_all(out).map_err(|e| ModelError::Syntax(e.to_string()))?;
    let mut model = Model::default();
    let index: std::collections::HashMap<&str, usize> =
        problem.unknowns.iter().enumerate().map(|(i, u)| (u.name.as_str(), i)).collect();
    for item in items.iter().filter_map(|i| i.as_list()) {
        for pair in item {
            let Some([name, val]) = pair.as_list().and_then(|l| <&[Sexp; 2]>::try_from(l).ok()) else {
                continue;
            };
            let Some(&u) = name.as_atom().and_then(|n| index.get(n)) else { continue };
            let v = match problem.unknowns[u].sort {
                Sort::Bool => match val.as_atom() {
                    Some("true") => ModelValue::Bool(true),
                    Some("false") => ModelValue::Bool(false),
                    _ => return Err(ModelError::BadValue(problem.unknowns[u].name.clone(), val.to_string())),
                },
                Sort::Int => match parse_number(val) {
                    Some(q) => ModelValue::Num(q),
                    None => return Err(ModelError::BadValue(problem.unknowns[u].name.clone(), val.to_string())),
                },
                Sort::Real => match parse_number(val) {
                    Some(q) => ModelValue::Num(q),
                    None => continue,
                },
            };
            model.values.insert(u, v);
        }
    }
    for (i, u) in problem.unknowns.iter().enumerate() {
        if u.sort != Sort::Real && !model.values.contains_key(&i) {
            return Err(ModelError::Missing(u.name.clone()));
        }
    }
    Ok(model)
}
