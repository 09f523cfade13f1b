//! Command-line front end for the fractional solver.

mod config;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{parse_list, parse_number, Num, NumList, Settings};
use mimfrac::harness::{self, OutputFormat};
use mimfrac::verify::{self, Suite};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "mimfrac",
    version,
    about = "Two-step fourth-order solver for the variable-order fractional mobile-immobile equation"
)]
struct Cli {
    /// TOML settings file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// March one level and write its row plus the error-vs-time series.
    Solve(Common),
    /// March every level and tabulate errors and rates.
    Converge(Common),
    /// Run the property suites.
    Verify(VerifyArgs),
    /// Observed order in time at a fixed fine spacing.
    TemporalOrder(TemporalArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// example1, example2 or manufactured:<preset>.
    #[arg(long)]
    problem: Option<String>,
    /// Time shift in (0, 1/2).
    #[arg(long, value_parser = parse_number)]
    alpha: Option<f64>,
    /// Comma-separated spacings, e.g. `1/4,1/8`.
    #[arg(long)]
    levels: Option<String>,
    /// Time step `k = h^p`.
    #[arg(long)]
    coupling_power: Option<f64>,
    /// derived or assembled.
    #[arg(long)]
    variant: Option<String>,
    /// lu, gmres, gmres-jacobi or gmres-ilu0.
    #[arg(long)]
    solver: Option<String>,
    /// three-point, pinned or reference.
    #[arg(long)]
    near_boundary: Option<String>,
    /// aligned or printed.
    #[arg(long)]
    half_layout: Option<String>,
    /// singular or shifted.
    #[arg(long)]
    start_seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Add the finest spacing to the default levels.
    #[arg(long)]
    deep: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            problem: self.problem.clone(),
            alpha: self.alpha.map(Num::Value),
            levels: self.levels.clone().map(NumList::Text),
            coupling_power: self.coupling_power,
            variant: self.variant.clone(),
            solver: self.solver.clone(),
            near_boundary: self.near_boundary.clone(),
            half_layout: self.half_layout.clone(),
            start_seed: self.start_seed.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            deep: self.deep.then_some(true),
            jobs: self.jobs,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// coefficients, operators, oracle or all.
    #[arg(long)]
    suite: Option<String>,
    /// Seed for the random draws.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct TemporalArgs {
    #[command(flatten)]
    common: Common,
    /// Fixed spacing.
    #[arg(long, value_parser = parse_number)]
    spacing: Option<f64>,
    /// Comma-separated time steps.
    #[arg(long)]
    steps: Option<String>,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<mimfrac::Error>() {
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn load(cli_config: &Option<PathBuf>, flags: Settings) -> Result<Settings> {
    let base = match cli_config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    Ok(base.overlay(flags))
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(c) => solve(load(&cli.config, c.settings())?),
        Command::Converge(c) => converge(load(&cli.config, c.settings())?),
        Command::Verify(v) => {
            let flags = Settings {
                suite: v.suite.clone(),
                seed: v.seed,
                out: v.out.clone(),
                format: v.format.clone(),
                ..Default::default()
            };
            run_verify(load(&cli.config, flags)?)
        }
        Command::TemporalOrder(t) => {
            let mut flags = t.common.settings();
            flags.spacing = t.spacing.map(Num::Value);
            if let Some(s) = &t.steps {
                parse_list(s).map_err(|e| mimfrac::Error::validation("steps", e.to_string()))?;
                flags.steps = Some(NumList::Text(s.clone()));
            }
            temporal(load(&cli.config, flags)?)
        }
    }
}

/// Write to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
        None => Ok(std::io::stdout().write_all(body)?),
    }
}

/// `run.csv` → `run.series.csv`.
fn series_path(out: &Path, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.series.{ext}"))
}

fn solve(s: Settings) -> Result<u8> {
    let cfg = s.run_config()?;
    let format = s.format()?;
    let report = harness::solve(&cfg)?;
    match format {
        OutputFormat::Json => emit(s.out.as_deref(), harness::to_json(&report).as_bytes())?,
        OutputFormat::Csv => {
            let (mut row, mut series) = (Vec::new(), Vec::new());
            harness::write_rows_csv(std::slice::from_ref(&report.row), &mut row)?;
            harness::write_series_csv(&report.series, &mut series)?;
            match &s.out {
                Some(out) => {
                    emit(Some(out), &row)?;
                    emit(Some(&series_path(out, "csv")), &series)?;
                }
                None => {
                    row.push(b'\n');
                    row.extend(series);
                    emit(None, &row)?;
                }
            }
        }
    }
    Ok(0)
}

fn converge(s: Settings) -> Result<u8> {
    let cfg = s.run_config()?;
    let format = s.format()?;
    let report = harness::converge(&cfg)?;
    match format {
        OutputFormat::Json => emit(s.out.as_deref(), harness::to_json(&report).as_bytes())?,
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            harness::write_rows_csv(&report.rows, &mut buf)?;
            emit(s.out.as_deref(), &buf)?;
        }
    }
    for f in &report.failures {
        eprintln!("level h={} k={} failed: {}", harness::fmt_e(f.h), harness::fmt_e(f.k), f.error);
    }
    Ok(if report.failures.iter().any(|f| f.solver_failure) {
        EXIT_SOLVER
    } else if report.failures.is_empty() {
        0
    } else {
        EXIT_VALIDATION
    })
}

fn temporal(s: Settings) -> Result<u8> {
    let cfg = s.run_config()?;
    let (h, steps) = s.temporal()?;
    let report = harness::temporal_order(&cfg, h, &steps)?;
    match s.format()? {
        OutputFormat::Json => emit(s.out.as_deref(), harness::to_json(&report).as_bytes())?,
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            harness::write_temporal_csv(&report, &mut buf)?;
            emit(s.out.as_deref(), &buf)?;
        }
    }
    Ok(0)
}

fn run_verify(s: Settings) -> Result<u8> {
    let suite = Suite::parse(s.suite.as_deref().unwrap_or("all"))?;
    let report = verify::run(suite, s.seed.unwrap_or(verify::DEFAULT_SEED))?;
    let body = match s.format()? {
        OutputFormat::Json => harness::to_json(&report),
        OutputFormat::Csv => report.render(),
    };
    emit(s.out.as_deref(), body.as_bytes())?;
    Ok(if report.passed() { 0 } else { EXIT_VERIFY })
}
