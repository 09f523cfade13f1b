//! Settings file plus command-line overrides.

use anyhow::{bail, Context, Result};
use mimfrac::harness::{default_levels, default_temporal_steps, Coupling, OutputFormat, RunConfig};
use mimfrac::{HalfLayout, StartSeed};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// A number or a fraction such as `"1/8"`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Text(s) => parse_number(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumList {
    List(Vec<Num>),
    Text(String),
}

impl NumList {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            NumList::List(v) => v.iter().map(Num::value).collect(),
            NumList::Text(s) => parse_list(s),
        }
    }
}

/// `0.125`, `1/8` or `2^-3`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = if let Some((a, b)) = s.split_once('/') {
        a.trim().parse::<f64>()? / b.trim().parse::<f64>()?
    } else if let Some((a, b)) = s.split_once('^') {
        a.trim().parse::<f64>()?.powf(b.trim().parse::<f64>()?)
    } else {
        s.parse::<f64>().with_context(|| format!("not a number: {s:?}"))?
    };
    Ok(v)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_number).collect()
}

/// Every setting, all optional. Used for both the file and the flags.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub problem: Option<String>,
    pub alpha: Option<Num>,
    pub levels: Option<NumList>,
    pub coupling_power: Option<f64>,
    pub variant: Option<String>,
    pub solver: Option<String>,
    pub near_boundary: Option<String>,
    pub half_layout: Option<String>,
    pub start_seed: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub deep: Option<bool>,
    pub jobs: Option<usize>,
    pub spacing: Option<Num>,
    pub steps: Option<NumList>,
    pub suite: Option<String>,
    pub seed: Option<u64>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Values set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            problem: over.problem.or(self.problem),
            alpha: over.alpha.or(self.alpha),
            levels: over.levels.or(self.levels),
            coupling_power: over.coupling_power.or(self.coupling_power),
            variant: over.variant.or(self.variant),
            solver: over.solver.or(self.solver),
            near_boundary: over.near_boundary.or(self.near_boundary),
            half_layout: over.half_layout.or(self.half_layout),
            start_seed: over.start_seed.or(self.start_seed),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
            deep: over.deep.or(self.deep),
            jobs: over.jobs.or(self.jobs),
            spacing: over.spacing.or(self.spacing),
            steps: over.steps.or(self.steps),
            suite: over.suite.or(self.suite),
            seed: over.seed.or(self.seed),
        }
    }

    pub fn format(&self) -> Result<OutputFormat> {
        Ok(OutputFormat::parse(self.format.as_deref().unwrap_or("csv"))?)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut scheme = mimfrac::harness::scheme_from_names(
            self.variant.as_deref().unwrap_or("derived"),
            self.near_boundary.as_deref().unwrap_or("three-point"),
            self.solver.as_deref().unwrap_or("lu"),
        )?;
        scheme.family.half_layout = match self.half_layout.as_deref().unwrap_or("aligned") {
            "aligned" => HalfLayout::Aligned,
            "printed" => HalfLayout::Printed,
            other => {
                bail!(mimfrac::Error::validation("half-layout", format!("unknown layout {other:?} (aligned, printed)")))
            }
        };
        scheme.family.seed = match self.start_seed.as_deref().unwrap_or("singular") {
            "singular" => StartSeed::Singular,
            "shifted" => StartSeed::Shifted,
            other => {
                bail!(mimfrac::Error::validation("start-seed", format!("unknown seed {other:?} (singular, shifted)")))
            }
        };
        let levels = match &self.levels {
            Some(l) => l.values().map_err(|e| mimfrac::Error::validation("levels", e.to_string()))?,
            None => default_levels(self.deep.unwrap_or(false)),
        };
        let alpha = match &self.alpha {
            Some(a) => a.value().map_err(|e| mimfrac::Error::validation("alpha", e.to_string()))?,
            None => 0.25,
        };
        let jobs = self.jobs.unwrap_or(1);
        if jobs == 0 {
            bail!(mimfrac::Error::validation("jobs", "must be at least 1"));
        }
        Ok(RunConfig {
            problem: self.problem.clone().unwrap_or_else(|| "example1".into()),
            alpha,
            levels,
            coupling: Coupling::Power(self.coupling_power.unwrap_or(4.0)),
            scheme,
            jobs,
        })
    }

    /// Spacing and time steps for the temporal probe.
    pub fn temporal(&self) -> Result<(f64, Vec<f64>)> {
        let (h0, k0) = default_temporal_steps();
        let h = match &self.spacing {
            Some(h) => h.value().map_err(|e| mimfrac::Error::validation("spacing", e.to_string()))?,
            None => h0,
        };
        let steps = match &self.steps {
            Some(s) => s.values().map_err(|e| mimfrac::Error::validation("steps", e.to_string()))?,
            None => k0,
        };
        Ok((h, steps))
    }
}
