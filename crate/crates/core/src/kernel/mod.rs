//! Coefficient sequences of the discrete variable-order Caputo operator.
//!
//! Weights are laid out by half index: entry `m` of a family holds the
//! coefficient `a_{·, (m+1)/2}` that multiplies `δ_t U^{m/2}`.
//!
//! * `Int` family with lead `n`: `a_{n,l}`, `l = 1/2, 1, ..., n` (length `2n`).
//! * `Half` family with lead `n`: `a_{n+1/2,l}`, `l = 1/2, ..., n+1/2` (length `2n+1`).
//!
//! Every interval `[i, i+1]` of the quadratic reconstruction contributes
//! `d̃ - f̃` to its left half and `f̃` to its right half, with `D = lead + α - i`
//! measured from the target time.

mod history;
mod quadrature;

pub use history::{discrete_caputo, discrete_caputo_of, HistoryBuffer, ThetaWeights};
pub use quadrature::{caputo_quadrature_oracle, gauss_legendre};

use crate::error::{Error, Result};
use crate::grid::Level;
use serde::{Deserialize, Serialize};

/// `Γ(x)`.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Which generalized sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoeffFamily {
    /// First index `n + 1/2`.
    Half,
    /// First index `n` (integer).
    Int,
}

/// Assignment of the interval weights inside the `Half` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum HalfLayout {
    /// Interval weights placed exactly as in the `Int` family, shifted by the half step.
    #[default]
    Aligned,
    /// Integer `l` gets `d̃ - f̃` of the interval ending there and half-integer `l`
    /// gets `f̃` of the interval starting there, with `f̃(1+α) + α^{1-β}` at the end.
    /// Kept as a diagnostic: its local order is below one.
    Printed,
}

/// The single weight of the `Half` family for lead `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StartSeed {
    /// `α^{-β} / 2`.
    #[default]
    Singular,
    /// `(1/2 + α)^{1-β}`.
    Shifted,
}

/// Layout choices for building families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FamilyOptions {
    pub half_layout: HalfLayout,
    pub seed: StartSeed,
}

fn check_order(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("order beta = {beta} outside (0, 2)")))
    }
}

fn pow_checked(base: f64, e: f64) -> Result<f64> {
    if base < 0.0 {
        return Err(Error::Domain(format!("negative base {base} in power")));
    }
    Ok(base.powf(e))
}

/// `(n_eff+α-i)^{1-β} - (n_eff+α-i-1)^{1-β}`.
pub fn dtilde(n_eff: f64, i: usize, alpha: f64, beta: f64) -> Result<f64> {
    let d = n_eff + alpha - i as f64;
    Ok(pow_checked(d, 1.0 - beta)? - pow_checked(d - 1.0, 1.0 - beta)?)
}

/// `2/(2-β)[D^{2-β} - (D-1)^{2-β}] - 1/2[D^{1-β} + 3(D-1)^{1-β}]`, `D = n_eff+α-i`.
pub fn ftilde(n_eff: f64, i: usize, alpha: f64, beta: f64) -> Result<f64> {
    let d = n_eff + alpha - i as f64;
    let (p, q) = (pow_checked(d, 1.0 - beta)?, pow_checked(d - 1.0, 1.0 - beta)?);
    let (p2, q2) = (d.powf(2.0 - beta), (d - 1.0).powf(2.0 - beta));
    Ok(2.0 / (2.0 - beta) * (p2 - q2) - 0.5 * (p + 3.0 * q))
}

/// First entry of the `Half` family, `(n+1/2+α)^{1-β} - (n+α)^{1-β}`.
pub fn ftilde_dot(n: usize, alpha: f64, beta: f64) -> f64 {
    let d = n as f64 + alpha;
    (d + 0.5).powf(1.0 - beta) - d.powf(1.0 - beta)
}

/// Endpoint contribution `α^{1-β}`.
pub fn endpoint(alpha: f64, beta: f64) -> f64 {
    alpha.powf(1.0 - beta)
}

/// The lead-zero `Half` weight.
pub fn seed(alpha: f64, beta: f64, kind: StartSeed) -> f64 {
    match kind {
        StartSeed::Singular => 0.5 * alpha.powf(-beta),
        StartSeed::Shifted => (0.5 + alpha).powf(1.0 - beta),
    }
}

/// Number of weights in a family.
pub fn family_len(family: CoeffFamily, lead: usize) -> usize {
    match family {
        CoeffFamily::Int => 2 * lead,
        CoeffFamily::Half => 2 * lead + 1,
    }
}

/// Powers `(m+α)^{1-β}` for `m = 0..=upto`, computed from cached logarithms.
#[derive(Debug, Clone)]
pub struct PowerTable {
    alpha: f64,
    ln: Vec<f64>,
}

impl PowerTable {
    pub fn new(alpha: f64, upto: usize) -> Self {
        let ln = (0..=upto).map(|m| (m as f64 + alpha).ln()).collect();
        PowerTable { alpha, ln }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn capacity(&self) -> usize {
        self.ln.len() - 1
    }

    /// Fill `out` with `(m+α)^{1-β}` for `m = 0..=upto`.
    pub fn powers(&self, beta: f64, upto: usize, out: &mut Vec<f64>) {
        let e = 1.0 - beta;
        out.clear();
        out.extend(self.ln[..=upto].iter().map(|l| (e * l).exp()));
    }
}

/// Builds family weights for one order value from a power table.
#[derive(Debug, Clone)]
pub struct WeightBuilder {
    table: PowerTable,
    opts: FamilyOptions,
    p1: Vec<f64>,
    cached_beta: Option<f64>,
    stationary: bool,
}

impl WeightBuilder {
    pub fn new(alpha: f64, max_lead: usize, opts: FamilyOptions) -> Self {
        WeightBuilder {
            table: PowerTable::new(alpha, max_lead + 1),
            opts,
            p1: Vec::new(),
            cached_beta: None,
            stationary: false,
        }
    }

    /// Declare that the order never changes, so powers are computed once to full capacity.
    pub fn stationary(mut self, yes: bool) -> Self {
        self.stationary = yes;
        self
    }

    pub fn options(&self) -> FamilyOptions {
        self.opts
    }

    fn load(&mut self, beta: f64, upto: usize) {
        let fresh = self.cached_beta == Some(beta) && self.p1.len() > upto;
        if !fresh {
            let cap = self.table.capacity();
            if upto > cap {
                self.table = PowerTable::new(self.table.alpha, upto.max(2 * cap));
            }
            let upto = if self.stationary { self.table.capacity() } else { upto };
            self.table.powers(beta, upto, &mut self.p1);
            self.cached_beta = Some(beta);
        }
    }

    /// Write the weights `a` (unscaled) into `out`.
    pub fn build(&mut self, family: CoeffFamily, lead: usize, beta: f64, out: &mut Vec<f64>) {
        let alpha = self.table.alpha;
        self.load(beta, lead + 1);
        let p1 = &self.p1;
        let c = 2.0 / (2.0 - beta);
        // interval with D = m + α, D - 1 = m - 1 + α
        let interval = |m: usize| {
            let (p, q) = (p1[m], p1[m - 1]);
            let (dp, dq) = (m as f64 + alpha, m as f64 - 1.0 + alpha);
            let f = c * (dp * p - dq * q) - 0.5 * (p + 3.0 * q);
            (p - q - f, f)
        };
        out.clear();
        out.resize(family_len(family, lead), 0.0);
        match family {
            CoeffFamily::Int => {
                for i in 0..lead {
                    let (left, right) = interval(lead - i);
                    out[2 * i] = left;
                    out[2 * i + 1] = right;
                }
                if lead > 0 {
                    out[2 * lead - 1] += p1[0];
                }
            }
            CoeffFamily::Half if lead == 0 => out[0] = seed(alpha, beta, self.opts.seed),
            CoeffFamily::Half => {
                out[0] = (lead as f64 + 0.5 + alpha).powf(1.0 - beta) - p1[lead];
                match self.opts.half_layout {
                    HalfLayout::Aligned => {
                        for i in 0..lead {
                            let (left, right) = interval(lead - i);
                            out[2 * i + 1] = left;
                            out[2 * i + 2] = right;
                        }
                        out[2 * lead] += p1[0];
                    }
                    HalfLayout::Printed => {
                        for i in 0..lead {
                            let (left, right) = interval(lead - i);
                            out[2 * i + 1] = right;
                            if i > 0 {
                                out[2 * i] = left;
                            }
                        }
                        out[2 * lead] = interval(1).1 + p1[0];
                    }
                }
            }
        }
    }
}

/// All weights of one family, computed directly from the scalar formulas.
pub fn family_weights(
    family: CoeffFamily,
    lead: usize,
    alpha: f64,
    beta: f64,
    opts: FamilyOptions,
) -> Result<Vec<f64>> {
    crate::grid::check_alpha(alpha)?;
    check_order(beta)?;
    let n = lead as f64;
    let mut w = vec![0.0; family_len(family, lead)];
    match family {
        CoeffFamily::Int => {
            for i in 0..lead {
                let (d, f) = (dtilde(n, i, alpha, beta)?, ftilde(n, i, alpha, beta)?);
                w[2 * i] = d - f;
                w[2 * i + 1] = f;
            }
            if lead > 0 {
                w[2 * lead - 1] += endpoint(alpha, beta);
            }
        }
        CoeffFamily::Half if lead == 0 => w[0] = seed(alpha, beta, opts.seed),
        CoeffFamily::Half => {
            w[0] = ftilde_dot(lead, alpha, beta);
            match opts.half_layout {
                HalfLayout::Aligned => {
                    for i in 0..lead {
                        let (d, f) = (dtilde(n, i, alpha, beta)?, ftilde(n, i, alpha, beta)?);
                        w[2 * i + 1] = d - f;
                        w[2 * i + 2] = f;
                    }
                    w[2 * lead] += endpoint(alpha, beta);
                }
                HalfLayout::Printed => {
                    for l in 1..lead {
                        w[2 * l] = dtilde(n, l, alpha, beta)? - ftilde(n, l, alpha, beta)?;
                    }
                    for i in 0..lead {
                        w[2 * i + 1] = ftilde(n, i, alpha, beta)?;
                    }
                    w[2 * lead] = ftilde(1.0, 0, alpha, beta)? + endpoint(alpha, beta);
                }
            }
        }
    }
    Ok(w)
}

/// The coefficient `a_{lead(+1/2), l}` for `l = m/2`, `m ≥ 1`.
pub fn a_coeff(family: CoeffFamily, lead: usize, l: Level, alpha: f64, beta: f64, opts: FamilyOptions) -> Result<f64> {
    let len = family_len(family, lead);
    let m = l.half_index();
    if m == 0 || m > len {
        let top = match family {
            CoeffFamily::Int => Level::whole(lead),
            CoeffFamily::Half => Level::half(lead),
        };
        return Err(Error::Index { index: l.to_string(), range: format!("1/2..={top}") });
    }
    Ok(family_weights(family, lead, alpha, beta, opts)?[m - 1])
}

/// `k^{1-β} / Γ(2-β)`.
pub fn theta_scale(k: f64, beta: f64) -> f64 {
    k.powf(1.0 - beta) / gamma(2.0 - beta)
}

/// Start weight `k^{1-β} Γ(2-β)^{-1} α^{-β}/2` with `β` taken at `t = αk`.
pub fn theta0(k: f64, alpha: f64, beta: f64) -> f64 {
    theta_scale(k, beta) * seed(alpha, beta, StartSeed::Singular)
}

/// Right side of the lower bound on family weights, `(2-3β)(1-β)/(2(2-β)) · (lead_value + α - l)^{-β}`.
pub fn lower_bound(lead_value: f64, l: f64, alpha: f64, beta: f64) -> f64 {
    (2.0 - 3.0 * beta) * (1.0 - beta) / (2.0 * (2.0 - beta)) * (lead_value + alpha - l).powf(-beta)
}
