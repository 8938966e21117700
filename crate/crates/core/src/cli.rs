//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an assertion fails, a certified
//! violation is found or a computation fails, 2 on usage or input errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::channels::{ChannelFile, StinespringIsometry};
use crate::dilation::{minimize_over_env, optimal_env_unitary, MinimizeOptions};
use crate::error::Error;
use crate::harness::{
    check_conjecture, fuzz_to_writer, repro_appendix_a, repro_appendix_b, repro_example1,
    repro_triangle_counterexample, CheckOptions, FuzzConfig, Report, Slice, Verdict, CHECK_TOL,
};
use crate::linalg::RngStream;
use crate::channels::kraus_rank;
use crate::metrics::{bures_from_fidelity, diamond_distance, operational_fidelity, Certified};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "STINESPRING_LAB_SEED";
/// Seed used when neither `--seed` nor the environment variable is given.
pub const DEFAULT_SEED: u64 = 0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stinespring-lab", version, about = "Channel distances and Stinespring dilation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Largest solver duality gap accepted as a certified result.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub gap_tol: f64,
    /// Absolute slack for inequality checks.
    #[arg(long, global = true, default_value_t = CHECK_TOL)]
    pub check_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    /// First channel (Kraus or Stinespring JSON).
    pub first: PathBuf,
    /// Second channel (Kraus or Stinespring JSON).
    pub second: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Random restarts of the environment-unitary search.
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// RNG seed (falls back to STINESPRING_LAB_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interval width regarded as closed.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operational (worst-case entangled) fidelity.
    Fidelity(PairArgs),
    /// Diamond-norm distance.
    Diamond(PairArgs),
    /// Bures distance √(2(1 − F)).
    Bures(PairArgs),
    /// Bracket min over environment unitaries of ‖V₁ − (1⊗U)V₂‖∞.
    Minimize {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Environment unitary attaining the Bures distance (needs m ≥ r₁ + r₂).
    Dilate {
        #[command(flatten)]
        pair: PairArgs,
        /// Also write (1⊗U)V₂ as a Stinespring channel file.
        #[arg(long)]
        emit_isometry: Option<PathBuf>,
    },
    /// Evaluate every inequality check for one pair.
    CheckConjecture {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Also probe the embedding into m + 1.
        #[arg(long)]
        embedding: bool,
    },
    /// Randomized checks written as JSON lines.
    Fuzz(FuzzArgs),
    /// Reproduce a fixed numerical claim.
    #[command(subcommand)]
    Repro(ReproCommand),
}

#[derive(Debug, Clone, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// RNG seed (falls back to STINESPRING_LAB_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[arg(long, default_value_t = 6)]
    pub m_max: usize,
    #[arg(long, value_enum, default_value_t = SliceArg::Any)]
    pub slice: SliceArg,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Also probe the embedding into m + 1.
    #[arg(long)]
    pub embedding: bool,
    /// Record wall-clock time per trial.
    #[arg(long)]
    pub wall_time: bool,
    /// JSONL output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SliceArg {
    Any,
    Rank1,
    Prop1,
    Tight,
}

impl From<SliceArg> for Slice {
    fn from(s: SliceArg) -> Self {
        match s {
            SliceArg::Any => Slice::Any,
            SliceArg::Rank1 => Slice::Rank1,
            SliceArg::Prop1 => Slice::Prop1,
            SliceArg::Tight => Slice::Tight,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ReproCommand {
    /// Identity against phase rotations by roots of unity.
    Example1 {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Unitary versus contraction gap on a 4×2 pair.
    AppendixA,
    /// Distance above √2 with nonzero fidelity on a 6×3 pair.
    AppendixB,
    /// Triangle inequality failure of the minimal dilation distance.
    Triangle,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn input(path: &Path, err: Error) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }

    fn compute(err: Error) -> Self {
        Self { code: EXIT_FAIL, message: err.to_string() }
    }
}

/// Seed precedence: flag, then environment variable, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| CliError::usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        None => Ok(DEFAULT_SEED),
    }
}

fn seed_from(flag: Option<u64>) -> Result<u64, CliError> {
    let env = std::env::var(SEED_ENV).ok();
    resolve_seed(flag, env.as_deref())
}

fn read_channel(path: &Path) -> Result<ChannelFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(path, e.into()))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| CliError::input(path, e.into()))
}

/// Loads both files as isometries sharing the larger environment.
fn read_pair(pair: &PairArgs) -> Result<(StinespringIsometry, StinespringIsometry), CliError> {
    let a = read_channel(&pair.first)?;
    let b = read_channel(&pair.second)?;
    let m = a.env_dim().max(b.env_dim());
    let v1 = a.to_stinespring(Some(m)).map_err(|e| CliError::input(&pair.first, e))?;
    let v2 = b.to_stinespring(Some(m)).map_err(|e| CliError::input(&pair.second, e))?;
    if (v1.dim_in(), v1.dim_out()) != (v2.dim_in(), v2.dim_out()) {
        return Err(CliError::usage(format!(
            "{} is {}→{} but {} is {}→{}",
            pair.first.display(),
            v1.dim_in(),
            v1.dim_out(),
            pair.second.display(),
            v2.dim_in(),
            v2.dim_out()
        )));
    }
    Ok((v1, v2))
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T, text: impl FnOnce() -> String) -> Result<(), CliError> {
    let res = match format {
        Format::Json => serde_json::to_writer_pretty(&mut *out, value).map_err(Error::from).and_then(|_| Ok(writeln!(out)?)),
        Format::Text => write!(out, "{}", text()).map_err(Error::from),
    };
    res.map_err(CliError::compute)
}

/// Prints `c`; the exit code reflects whether the underlying solver gap
/// `solver_gap` is within `--gap-tol`.
fn certified(out: &mut dyn Write, common: &Common, name: &str, c: Certified, solver_gap: f64) -> Result<i32, CliError> {
    emit(out, common.format, &json!({ "value": c.value, "gap": c.gap }), || {
        format!("{name} = {:.10} (gap {:.2e})\n", c.value, c.gap)
    })?;
    if solver_gap > common.gap_tol {
        eprintln!("warning: {name} solver gap {solver_gap:.2e} exceeds --gap-tol {:.2e}", common.gap_tol);
        return Ok(EXIT_FAIL);
    }
    Ok(EXIT_OK)
}

fn search_options(search: &SearchArgs) -> Result<MinimizeOptions, CliError> {
    if search.restarts == 0 {
        return Err(CliError::usage("--restarts must be positive"));
    }
    Ok(MinimizeOptions {
        restarts: search.restarts,
        tol: search.tol,
        stream: RngStream::new(seed_from(search.seed)?),
        ..MinimizeOptions::default()
    })
}

fn report_out(out: &mut dyn Write, format: Format, rep: &Report) -> Result<i32, CliError> {
    emit(out, format, rep, || rep.to_text())?;
    Ok(if rep.passed() { EXIT_OK } else { EXIT_FAIL })
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let common = cli.common;
    match cli.command {
        Command::Fidelity(pair) => {
            let (v1, v2) = read_pair(&pair)?;
            let f = operational_fidelity(&v1, &v2).map_err(CliError::compute)?;
            certified(out, &common, "fidelity", f, f.gap)
        }
        Command::Bures(pair) => {
            let (v1, v2) = read_pair(&pair)?;
            let f = operational_fidelity(&v1, &v2).map_err(CliError::compute)?;
            certified(out, &common, "bures", bures_from_fidelity(f), f.gap)
        }
        Command::Diamond(pair) => {
            let (v1, v2) = read_pair(&pair)?;
            let d = diamond_distance(&v1.to_channel(), &v2.to_channel()).map_err(CliError::compute)?;
            certified(out, &common, "diamond", d, d.gap)
        }
        Command::Minimize { pair, search } => {
            let (v1, v2) = read_pair(&pair)?;
            let opts = search_options(&search)?;
            let res = minimize_over_env(&v1, &v2, &opts).map_err(CliError::compute)?;
            emit(out, common.format, &res, || {
                format!(
                    "min distance in [{:.10}, {:.10}] (restarts {}, converged {})\n",
                    res.lower, res.upper, res.restarts_used, res.converged
                )
            })?;
            Ok(EXIT_OK)
        }
        Command::Dilate { pair, emit_isometry } => {
            let (mut v1, mut v2) = read_pair(&pair)?;
            let needed = kraus_rank(&v1.to_channel()) + kraus_rank(&v2.to_channel());
            if v1.dim_env() < needed {
                v1 = v1.embed_env(needed).map_err(CliError::compute)?;
                v2 = v2.embed_env(needed).map_err(CliError::compute)?;
            }
            let opt = optimal_env_unitary(&v1, &v2).map_err(CliError::compute)?;
            let rotated = v2.rotate_env(&opt.u).map_err(CliError::compute)?;
            if let Some(path) = &emit_isometry {
                let file = File::create(path).map_err(|e| CliError::input(path, e.into()))?;
                let mut w = BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, &ChannelFile::from_stinespring(&rotated))
                    .map_err(|e| CliError::input(path, e.into()))?;
                w.flush().map_err(|e| CliError::input(path, e.into()))?;
            }
            let body = json!({
                "dim_env": v1.dim_env(),
                "u": opt.u,
                "dist": opt.dist,
                "fidelity": { "value": opt.fidelity.fidelity.value, "gap": opt.fidelity.fidelity.gap },
                "bures": (2.0 * (1.0 - opt.fidelity.fidelity.value)).max(0.0).sqrt(),
            });
            emit(out, common.format, &body, || {
                format!("dist = {:.10}, fidelity = {:.10}\n", opt.dist, opt.fidelity.fidelity.value)
            })?;
            Ok(EXIT_OK)
        }
        Command::CheckConjecture { pair, search, embedding } => {
            let (v1, v2) = read_pair(&pair)?;
            let opts = CheckOptions { minimize: search_options(&search)?, tol: common.check_tol, embedding };
            let ev = check_conjecture(&v1, &v2, &opts).map_err(CliError::compute)?;
            let body = json!({
                "dims": ev.dims,
                "fidelity": ev.fidelity,
                "bures": ev.bures,
                "diamond": ev.diamond,
                "min_interval": [ev.minimization.lower, ev.minimization.upper],
                "checks": ev.checks,
            });
            emit(out, common.format, &body, || {
                let mut s = format!(
                    "min distance in [{:.10}, {:.10}], diamond {:.10}, fidelity {:.10}\n",
                    ev.minimization.lower, ev.minimization.upper, ev.diamond.value, ev.fidelity.value
                );
                for (name, c) in &ev.checks {
                    s += &format!("  {:<20} {:<14} lhs {:.10}  rhs {:.10}\n", snake(name), snake(&c.verdict), c.lhs, c.rhs);
                }
                s
            })?;
            let violated = ev.checks.values().any(|c| c.verdict == Verdict::Violation);
            Ok(if violated { EXIT_FAIL } else { EXIT_OK })
        }
        Command::Fuzz(args) => {
            if args.trials == 0 {
                return Err(CliError::usage("--trials must be positive"));
            }
            let cfg = FuzzConfig {
                trials: args.trials,
                seed: seed_from(args.seed)?,
                n_max: args.n_max,
                k_max: args.k_max,
                m_max: args.m_max,
                slice: args.slice.into(),
                restarts: args.restarts.max(1),
                tol: common.check_tol,
                embedding: args.embedding,
                record_time: args.wall_time,
                first_trial: 0,
            };
            let summary = match &args.out {
                Some(path) => {
                    let file = File::create(path).map_err(|e| CliError::input(path, e.into()))?;
                    let mut w = BufWriter::new(file);
                    let s = fuzz_to_writer(&cfg, &mut w).map_err(usage_or_compute)?;
                    emit(out, common.format, &s, || {
                        format!(
                            "{} trials, {} violations, {} errors, {} inconclusive checks\n",
                            s.trials, s.violations, s.errors, s.inconclusive_checks
                        )
                    })?;
                    s
                }
                None => fuzz_to_writer(&cfg, out).map_err(usage_or_compute)?,
            };
            Ok(if summary.violations > 0 { EXIT_FAIL } else { EXIT_OK })
        }
        Command::Repro(which) => {
            let rep = match which {
                ReproCommand::Example1 { n_max } => {
                    if n_max == 0 {
                        return Err(CliError::usage("--n-max must be positive"));
                    }
                    repro_example1(n_max)
                }
                ReproCommand::AppendixA => repro_appendix_a(),
                ReproCommand::AppendixB => repro_appendix_b(),
                ReproCommand::Triangle => repro_triangle_counterexample(),
            }
            .map_err(CliError::compute)?;
            report_out(out, common.format, &rep)
        }
    }
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn usage_or_compute(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) => CliError::usage(e.to_string()),
        other => CliError::compute(other),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
