//! Convergence sweeps, temporal-order probes and report writers.

use crate::error::{Error, Result};
use crate::grid::{check_alpha, convergence_rate, intervals_for, Grid1D, Level, TimeMesh};
use crate::kernel::{FamilyOptions, HalfLayout, StartSeed};
use crate::linalg::SolverKind;
use crate::problems::{resolve, ProblemSpec};
use crate::scheme::{march, MarchResult, NearBoundary, SchemeConfig, SchemeVariant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Default spacings `2^{-1}..2^{-3}`; `deep` adds `2^{-4}`.
/// `h = 1/2` is too coarse for the five-point stencil and is reported as a failed level.
pub fn default_levels(deep: bool) -> Vec<f64> {
    let mut v = vec![0.5, 0.25, 0.125];
    if deep {
        v.push(0.0625);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::validation("format", format!("unknown format {other:?} (csv, json)"))),
        }
    }
}

/// How the time step follows the spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    /// `k = h^p`.
    Power(f64),
    /// Explicit `(h, k)` pairs; overrides the level list.
    Pairs(Vec<(f64, f64)>),
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Power(4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: String,
    pub alpha: f64,
    pub levels: Vec<f64>,
    pub coupling: Coupling,
    pub scheme: SchemeConfig,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "example1".into(),
            alpha: 0.25,
            levels: default_levels(false),
            coupling: Coupling::default(),
            scheme: SchemeConfig::default(),
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// `(h, k)` for every level.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match &self.coupling {
            Coupling::Power(p) => self.levels.iter().map(|&h| (h, h.powf(*p))).collect(),
            Coupling::Pairs(v) => v.clone(),
        }
    }

    /// Checks that do not depend on a single level.
    pub fn validate(&self) -> Result<ProblemSpec> {
        check_alpha(self.alpha)?;
        if let Coupling::Power(p) = self.coupling {
            if !(p > 0.0) {
                return Err(Error::validation("coupling_power", format!("must be positive, got {p}")));
            }
        }
        if self.pairs().is_empty() {
            return Err(Error::validation("levels", "no levels given"));
        }
        for (h, k) in self.pairs() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::validation("levels", format!("spacing must be positive, got {h}")));
            }
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::validation("levels", format!("time step must be positive, got {k}")));
            }
        }
        resolve(&self.problem)
    }

    pub fn metadata(&self, problem: &ProblemSpec) -> Metadata {
        Metadata {
            problem: problem.name.clone(),
            variant: self.scheme.variant.name().into(),
            alpha: self.alpha,
            beta_name: problem.beta.name.clone(),
            solver: self.scheme.solver.name(),
            near_boundary: self.scheme.near.name().into(),
            half_layout: match self.scheme.family.half_layout {
                HalfLayout::Aligned => "aligned".into(),
                HalfLayout::Printed => "printed".into(),
            },
            start_seed: match self.scheme.family.seed {
                StartSeed::Singular => "singular".into(),
                StartSeed::Shifted => "shifted".into(),
            },
            coupling: match &self.coupling {
                Coupling::Power(p) => format!("k=h^{p}"),
                Coupling::Pairs(_) => "pairs".into(),
            },
            order_violation: problem.order_violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub problem: String,
    pub variant: String,
    pub alpha: f64,
    pub beta_name: String,
    pub solver: String,
    pub near_boundary: String,
    pub half_layout: String,
    pub start_seed: String,
    pub coupling: String,
    pub order_violation: bool,
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub h: f64,
    pub k: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub norm_u: Option<f64>,
    #[serde(rename = "norm_U")]
    pub norm_big_u: f64,
    pub norm_e: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub h: f64,
    pub wall_seconds: f64,
    pub solves: usize,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFailure {
    pub h: f64,
    pub k: f64,
    pub error: String,
    pub solver_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: Metadata,
    pub rows: Vec<LevelRow>,
    pub stats: Vec<LevelStats>,
    pub failures: Vec<LevelFailure>,
}

impl ConvergenceReport {
    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.norm_e).collect()
    }
}

/// Run one level.
pub fn run_level(problem: &ProblemSpec, alpha: f64, h: f64, k: f64, scheme: SchemeConfig) -> Result<MarchResult> {
    let m = intervals_for(problem.l - problem.l0, h, "h")?;
    let grid = Grid1D::new(problem.l0, problem.l, m)?;
    let n = intervals_for(problem.t_final, k, "k")?;
    let time = TimeMesh::new(problem.t_final, n, alpha)?;
    march(problem, grid, time, scheme)
}

fn row_from(r: &MarchResult) -> LevelRow {
    LevelRow {
        h: r.h,
        k: r.k,
        m: r.intervals,
        n: r.steps,
        norm_u: r.sup_exact(),
        norm_big_u: r.sup_numeric(),
        norm_e: r.sup_error(),
        rate: None,
    }
}

/// Fill `rate` for rows whose predecessor has twice the spacing.
fn fill_rates(rows: &mut [LevelRow]) {
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        if (prev.h - 2.0 * cur.h).abs() <= 1e-12 * prev.h {
            if let (Some(a), Some(b)) = (prev.norm_e, cur.norm_e) {
                rows[i].rate = convergence_rate(a, b).ok();
            }
        }
    }
}

/// Run every level, in parallel on `jobs` threads, and tabulate errors and rates.
pub fn converge(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let problem = cfg.validate()?;
    let pairs = cfg.pairs();
    let work = |&(h, k): &(f64, f64)| {
        let start = Instant::now();
        (h, k, run_level(&problem, cfg.alpha, h, k, cfg.scheme), start.elapsed().as_secs_f64())
    };
    let results: Vec<_> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::validation("jobs", e.to_string()))?;
        pool.install(|| pairs.par_iter().map(work).collect())
    } else {
        pairs.iter().map(work).collect()
    };
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    for (h, k, res, secs) in results {
        match res {
            Ok(r) => {
                rows.push(row_from(&r));
                stats.push(LevelStats {
                    h,
                    wall_seconds: secs,
                    solves: r.solves,
                    solver_iterations: r.solver_iterations,
                });
            }
            Err(e) => failures.push(LevelFailure { h, k, solver_failure: e.is_solver_failure(), error: e.to_string() }),
        }
    }
    fill_rates(&mut rows);
    Ok(ConvergenceReport { metadata: cfg.metadata(&problem), rows, stats, failures })
}

/// A single level with its time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub metadata: Metadata,
    pub row: LevelRow,
    pub stats: LevelStats,
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    #[serde(rename = "norm_U")]
    pub norm_big_u: f64,
    pub norm_u: Option<f64>,
    pub norm_e: Option<f64>,
}

/// Run the first level of `cfg`.
pub fn solve(cfg: &RunConfig) -> Result<SolveReport> {
    let problem = cfg.validate()?;
    let (h, k) = cfg.pairs()[0];
    let start = Instant::now();
    let r = run_level(&problem, cfg.alpha, h, k, cfg.scheme)?;
    let secs = start.elapsed().as_secs_f64();
    let time = TimeMesh::new(problem.t_final, r.steps, cfg.alpha)?;
    let series = (0..=r.steps)
        .map(|n| SeriesPoint {
            t: time.t(Level::whole(n)),
            norm_big_u: r.norms_numeric[n],
            norm_u: r.norms_exact.as_ref().map(|v| v[n]),
            norm_e: r.errors.as_ref().map(|v| v[n]),
        })
        .collect();
    Ok(SolveReport {
        metadata: cfg.metadata(&problem),
        row: row_from(&r),
        stats: LevelStats { h, wall_seconds: secs, solves: r.solves, solver_iterations: r.solver_iterations },
        series,
    })
}

/// Errors at fixed `h` for a list of time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub metadata: Metadata,
    pub h: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// `log2(e(2k)/e(k))` for consecutive steps.
    pub pairwise: Vec<f64>,
    /// Least-squares slope of `log e` against `log k`.
    pub order: f64,
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Default probe: `h = 1/64`, `k = 1/8 .. 1/64`.
pub fn default_temporal_steps() -> (f64, Vec<f64>) {
    (1.0 / 64.0, vec![0.125, 0.0625, 0.03125, 0.015625])
}

pub fn temporal_order(cfg: &RunConfig, h: f64, steps: &[f64]) -> Result<TemporalReport> {
    let problem = cfg.validate()?;
    if problem.exact.is_none() {
        return Err(Error::validation("problem", "the temporal probe needs an exact solution"));
    }
    if steps.len() < 2 {
        return Err(Error::validation("levels", "need at least two time steps"));
    }
    let run = |&k: &f64| run_level(&problem, cfg.alpha, h, k, cfg.scheme).map(|r| r.sup_error().unwrap_or(f64::NAN));
    let errors: Vec<f64> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::validation("jobs", e.to_string()))?;
        pool.install(|| steps.par_iter().map(run).collect::<Result<_>>())?
    } else {
        steps.iter().map(run).collect::<Result<_>>()?
    };
    let pairwise = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(TemporalReport {
        metadata: cfg.metadata(&problem),
        h,
        steps: steps.to_vec(),
        order: log_slope(steps, &errors),
        errors,
        pairwise,
    })
}

/// C-style `%.6e`: six decimals and at least two exponent digits.
pub fn fmt_e(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mant}e{sign}{digits:0>2}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_e).unwrap_or_default()
}

pub const CSV_HEADER: &str = "h,k,M,N,norm_u,norm_U,norm_e,rate";

pub fn write_rows_csv(rows: &[LevelRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_e(r.h),
            fmt_e(r.k),
            r.m,
            r.n,
            opt(r.norm_u),
            fmt_e(r.norm_big_u),
            opt(r.norm_e),
            opt(r.rate)
        )?;
    }
    Ok(())
}

pub fn write_series_csv(series: &[SeriesPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "t,norm_U,norm_u,norm_e")?;
    for p in series {
        writeln!(w, "{},{},{},{}", fmt_e(p.t), fmt_e(p.norm_big_u), opt(p.norm_u), opt(p.norm_e))?;
    }
    Ok(())
}

pub fn write_temporal_csv(r: &TemporalReport, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "h,k,norm_e,rate")?;
    for (i, (k, e)) in r.steps.iter().zip(&r.errors).enumerate() {
        let rate = if i == 0 { String::new() } else { fmt_e(r.pairwise[i - 1]) };
        writeln!(w, "{},{},{},{}", fmt_e(r.h), fmt_e(*k), fmt_e(*e), rate)?;
    }
    writeln!(w, "# order {}", fmt_e(r.order))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// Build a scheme configuration from names.
pub fn scheme_from_names(variant: &str, near: &str, solver: &str) -> Result<SchemeConfig> {
    Ok(SchemeConfig {
        variant: SchemeVariant::parse(variant)?,
        near: NearBoundary::parse(near)?,
        solver: SolverKind::parse(solver)?,
        family: FamilyOptions::default(),
        keep_levels: false,
    })
}
