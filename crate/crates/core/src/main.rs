use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nonterm::cert::{parse_certificate, write_certificate};
use nonterm::certcheck::{validate_certificate, ValidateOptions};
use nonterm::corpus::{run_corpus, to_csv};
use nonterm::encode::{encode_check1, encode_check2, encode_modified, TemplateParams};
use nonterm::prove::{grid, load_file, prove, Answer, Mode, ProveOptions, ReachOptions};
use nonterm::solve::{emit, SolverConfig};
use nonterm::tsys::{write_tsys, NdetBox};

#[derive(Parser)]
#[command(name = "nonterm", version, about = "Non-termination prover for integer programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Try to prove that a program does not terminate.
    Prove(ProveArgs),
    /// Check a certificate file.
    Validate(ValidateArgs),
    /// Run the prover on every program of a directory.
    Corpus(CorpusArgs),
    /// Print the transition system of a program.
    Lower { file: PathBuf },
    /// Print the SMT-LIB problem of one check at one template size.
    Emit {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "1")]
        check: CheckArg,
        #[arg(short = 'c', long = "c", default_value_t = 1)]
        c: usize,
        #[arg(short = 'd', long = "d", default_value_t = 1)]
        d: usize,
        #[arg(short = 'D', long = "D", default_value_t = 0)]
        deg: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "mod")]
    Modified,
    Both,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Solver executable (SMT-LIB 2 on stdin).
    #[arg(long, default_value = "z3")]
    solver: PathBuf,
    /// Replaces the default solver arguments (`-in`); repeatable.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_arg: Vec<String>,
    /// Seconds per solver call.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Integer Farkas multipliers.
    #[arg(long)]
    int_multipliers: bool,
}

#[derive(Args, Clone)]
struct BoxArgs {
    /// Variable range used for validation.
    #[arg(long = "box", num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [-5i128, 110])]
    bx: Vec<i128>,
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, value_enum, default_value = "both")]
    check: CheckArg,
    /// Conjuncts per disjunct.
    #[arg(short = 'c', long = "c")]
    c: Option<usize>,
    /// Disjuncts per predicate.
    #[arg(short = 'd', long = "d")]
    d: Option<usize>,
    /// Polynomial degree.
    #[arg(short = 'D', long = "D")]
    deg: Option<u32>,
    /// Sweep the default grid (c <= 3, d <= 2, D <= 2), or up to the given bounds.
    #[arg(long)]
    grid: bool,
    /// Solve a fixed template size directly, without first trying smaller shapes.
    #[arg(long)]
    no_shape_search: bool,
    /// Run grid configurations one at a time.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    bx: BoxArgs,
    /// Maximum length of reachability paths.
    #[arg(long, default_value_t = 10_000)]
    reach_steps: usize,
    /// Maximum number of stored configurations during reachability search.
    #[arg(long, default_value_t = 1_000_000)]
    reach_cap: usize,
    /// Initial values for variables the program leaves unconstrained.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [-16i128, 16])]
    reach_box: Vec<i128>,
}

#[derive(Args)]
struct ProveArgs {
    file: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Machine-readable report on stdout.
    #[arg(long)]
    json: bool,
    /// Where to write the certificate (default: `<file>.cert`).
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    cert: PathBuf,
    #[command(flatten)]
    bx: BoxArgs,
}

#[derive(Args)]
struct CorpusArgs {
    dir: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    csv: bool,
}

fn options(g: &GridArgs) -> Result<ProveOptions, String> {
    let mode = match g.check {
        CheckArg::One => Mode::Check1,
        CheckArg::Two => Mode::Check2,
        CheckArg::Modified => Mode::Modified,
        CheckArg::Both => Mode::Both,
    };
    let fixed = g.c.is_some() || g.d.is_some() || g.deg.is_some();
    let single = !(g.grid || !fixed);
    let params = if !single {
        grid(g.c.unwrap_or(3), g.d.unwrap_or(2), g.deg.unwrap_or(2))
    } else {
        vec![TemplateParams::new(g.c.unwrap_or(1), g.d.unwrap_or(1), g.deg.unwrap_or(0)).map_err(|e| e.to_string())?]
    };
    let mut solver = SolverConfig {
        executable: g.solver.solver.clone(),
        timeout: Duration::from_secs(g.solver.timeout),
        int_multipliers: g.solver.int_multipliers,
        ..SolverConfig::default()
    };
    if !g.solver.solver_arg.is_empty() {
        solver.args = g.solver.solver_arg.clone();
    }
    let validate = ValidateOptions { lo: g.bx.bx[0], hi: g.bx.bx[1], ..ValidateOptions::default() };
    let reach = ReachOptions {
        steps: g.reach_steps,
        cap: g.reach_cap,
        ndet: NdetBox::new(-64, 63),
        init_box: Some((g.reach_box[0], g.reach_box[1])),
    };
    Ok(ProveOptions { mode, grid: params, solver, reach, validate, parallel: !g.sequential, shape_search: single && !g.no_shape_search })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Lower { file } => {
            let ts = load_file(&file).map_err(|e| e.to_string())?;
            print!("{}", write_tsys(&ts));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Emit { file, check, c, d, deg } => {
            let ts = load_file(&file).map_err(|e| e.to_string())?;
            let p = TemplateParams::new(c, d, deg).map_err(|e| e.to_string())?;
            let problem = match check {
                CheckArg::One | CheckArg::Both => encode_check1(&ts, p),
                CheckArg::Two => encode_check2(&ts, p),
                CheckArg::Modified => encode_modified(&ts, p),
            }
            .map_err(|e| e.to_string())?;
            print!("{}", emit(&problem, &SolverConfig::default().logic));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Prove(a) => {
            let ts = load_file(&a.file).map_err(|e| format!("{}: {e}", a.file.display()))?;
            let opts = options(&a.grid)?;
            let report = prove(&ts, &opts);
            let cert_path = a.cert.clone().unwrap_or_else(|| {
                let mut p = a.file.clone().into_os_string();
                p.push(".cert");
                p.into()
            });
            if let Some(c) = report.certificate() {
                std::fs::write(&cert_path, write_certificate(c)).map_err(|e| e.to_string())?;
            }
            if a.json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
            } else {
                println!("{}", report.answer);
                if let Some(at) = report.proving_attempt() {
                    println!("{} ({},{},{}) in {:.2}s", at.check, at.c, at.d, at.deg, at.seconds);
                    if let Some((c, d, deg)) = at.solved_as {
                        println!("model found with templates restricted to ({c},{d},{deg})");
                    }
                    if let Some(s) = &at.reach_stats {
                        println!("reach: {} configurations explored", s.explored);
                    }
                    println!("certificate: {}", cert_path.display());
                } else {
                    println!("{} attempts, none validated", report.attempts.len());
                }
            }
            Ok(if report.answer == Answer::No { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Validate(a) => {
            let text = std::fs::read_to_string(&a.cert).map_err(|e| format!("{}: {e}", a.cert.display()))?;
            let cert = parse_certificate(&text).map_err(|e| e.to_string())?;
            let opts = ValidateOptions { lo: a.bx.bx[0], hi: a.bx.bx[1], ..ValidateOptions::default() };
            let v = validate_certificate(&cert, &opts);
            println!("{v}");
            Ok(if v.ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Corpus(a) => {
            let opts = options(&a.grid)?;
            let rows = run_corpus(&a.dir, &opts).map_err(|e| e.to_string())?;
            if a.csv {
                print!("{}", to_csv(&rows));
            } else {
                println!("{}", serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?);
            }
            let unsound: Vec<&str> = rows.iter().filter(|r| r.unsound()).map(|r| r.name.as_str()).collect();
            if !unsound.is_empty() {
                eprintln!("NO on programs labelled terminating: {}", unsound.join(", "));
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
