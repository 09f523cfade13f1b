//! Executable property suites for the coefficient families, the spatial operators
//! and the linear solvers. Each property reports its case count, failures and the
//! worst margin (positive means satisfied).

use crate::error::{Error, Result};
use crate::grid::{delta_x_norm, discrete_l2_norm, inner_product, Grid1D};
use crate::kernel::{
    caputo_quadrature_oracle, discrete_caputo_of, endpoint, family_weights, lower_bound, CoeffFamily, FamilyOptions,
};
use crate::linalg::{dense_solve, gmres_solve, lu_solve, GmresConfig, Preconditioner};
use crate::problems::example1;
use crate::scheme::{march_with_observer, SchemeConfig, SchemeVariant};
use crate::stencil::{apply_lh, lh_row, NearBoundary, SchemeMatrix, SystemLayout};
use crate::{harness::log_slope, TimeMesh};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Coefficients,
    Operators,
    Oracle,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coefficients" => Ok(Suite::Coefficients),
            "operators" => Ok(Suite::Operators),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            other => Err(Error::validation(
                "suite",
                format!("unknown suite {other:?} (coefficients, operators, oracle, all)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub suite: String,
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Smallest margin seen; negative values are violations.
    pub worst_margin: f64,
    pub note: String,
    pub seconds: f64,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub properties: Vec<PropertyReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyReport::passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyReport> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for p in &self.properties {
            s.push_str(&format!(
                "{} {:<12} {:<28} cases={:<6} failures={:<5} worst_margin={:+.3e} {}\n",
                if p.passed() { "PASS" } else { "FAIL" },
                p.suite,
                p.name,
                p.cases,
                p.failures,
                p.worst_margin,
                p.note
            ));
        }
        s
    }
}

/// Running tally for one property.
struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
    note: String,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failures: 0, worst: f64::INFINITY, note: String::new() }
    }

    /// Record one case with `margin`; `ok` decides pass/fail.
    fn case(&mut self, margin: f64, ok: bool) {
        self.cases += 1;
        if !ok || margin.is_nan() {
            self.failures += 1;
        }
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
        }
    }

    fn finish(self, suite: &str, name: &str, start: Instant) -> PropertyReport {
        PropertyReport {
            suite: suite.into(),
            name: name.into(),
            cases: self.cases,
            failures: self.failures,
            worst_margin: self.worst,
            note: self.note,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn run(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let mut properties = Vec::new();
    if matches!(suite, Suite::Coefficients | Suite::All) {
        properties.extend(coefficients(seed)?);
    }
    if matches!(suite, Suite::Operators | Suite::All) {
        properties.extend(operators(seed)?);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        properties.extend(oracle(seed)?);
    }
    Ok(VerifyReport { seed, properties })
}

/// The two families `a_{n+s,·}`: `s = 1/2` is `Half` with lead `n`, `s = 1` is `Int` with lead `n+1`.
fn lemma_families(n: usize) -> [(CoeffFamily, usize, f64); 2] {
    [(CoeffFamily::Half, n, 0.5), (CoeffFamily::Int, n + 1, 1.0)]
}

/// Monotonicity and lower bound of the family weights.
pub fn lemma2(draws: usize, seed: u64) -> Result<[PropertyReport; 2]> {
    let start = Instant::now();
    let opts = FamilyOptions::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut mono, mut lower) = (Tally::new(), Tally::new());
    let mut first_bad: Option<String> = None;
    for _ in 0..draws {
        let n = rng.random_range(0..=50usize);
        let alpha = open_unit(&mut rng) * 0.5;
        let beta = open_unit(&mut rng) * 2.0 / 3.0;
        for (family, lead, s) in lemma_families(n) {
            let w = family_weights(family, lead, alpha, beta, opts)?;
            let dmin = w.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
            mono.case(dmin, dmin > 0.0);
            if dmin <= 0.0 && first_bad.is_none() {
                let at = w.windows(2).position(|p| p[1] <= p[0]).unwrap_or(0);
                first_bad =
                    Some(format!("first violation n={n} s={s} alpha={alpha:.4} beta={beta:.4} at l={}/2", at + 1));
            }
            // l = 1/2 ..= n+s-1/2, the final weight is outside the bound's range
            let lead_value = n as f64 + s;
            let mut worst = f64::INFINITY;
            for (m, a) in w.iter().enumerate().take(w.len().saturating_sub(1)) {
                let l = (m + 1) as f64 / 2.0;
                worst = worst.min(a - lower_bound(lead_value, l, alpha, beta));
            }
            if w.len() > 1 {
                lower.case(worst, worst > 0.0);
            }
        }
    }
    mono.note = first_bad.unwrap_or_default();
    Ok([
        mono.finish("coefficients", "lemma2-monotone", start),
        lower.finish("coefficients", "lemma2-lower-bound", start),
    ])
}

fn open_unit(rng: &mut StdRng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// `α^{1-β} < a_{n,n} = a_{n+1/2,n+1/2} = a_{n+1,n+1} < α^{1-β} + 2/(2-β)[(1+α)^{2-β} - α^{2-β}]`.
pub fn endpoint_chain(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let opts = FamilyOptions::default();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut t = Tally::new();
    for _ in 0..draws {
        let n = rng.random_range(1..=50usize);
        let alpha = open_unit(&mut rng) * 0.5;
        let beta = open_unit(&mut rng) * 2.0 / 3.0;
        let last =
            |f, lead| -> Result<f64> { Ok(*family_weights(f, lead, alpha, beta, opts)?.last().expect("nonempty")) };
        let (a, b, c) = (last(CoeffFamily::Int, n)?, last(CoeffFamily::Half, n)?, last(CoeffFamily::Int, n + 1)?);
        let eq = 1e-13 - (a - b).abs().max((b - c).abs());
        let lo = endpoint(alpha, beta);
        let hi = lo + 2.0 / (2.0 - beta) * ((1.0 + alpha).powf(2.0 - beta) - alpha.powf(2.0 - beta));
        let margin = eq.min(a - lo).min(hi - a);
        t.case(margin, eq >= 0.0 && a > lo && a < hi);
    }
    Ok(t.finish("coefficients", "endpoint-chain", start))
}

/// `Σ_{l=l0}^{m} a_{l+1/2}[(v^{l+1/2})² - (v^l)²]` against its rearranged form.
pub fn lemma4(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let opts = FamilyOptions::default();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x4444);
    let mut t = Tally::new();
    for _ in 0..draws {
        let n = rng.random_range(1..=50usize);
        let alpha = open_unit(&mut rng) * 0.5;
        let beta = open_unit(&mut rng) * 2.0 / 3.0;
        let (family, lead, s) = lemma_families(n)[rng.random_range(0..2)];
        let w = family_weights(family, lead, alpha, beta, opts)?;
        // half-index units: m2 = 2m, q = 2 l0
        let m2 = if s == 1.0 && rng.random_bool(0.5) { 2 * n + 1 } else { 2 * n };
        let q = 2 * rng.random_range(0..=m2 / 2);
        let v: Vec<f64> = (0..=m2 + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = (q..=m2).map(|p| w[p] * (v[p + 1].powi(2) - v[p].powi(2))).sum();
        let tail: f64 = (q..m2).map(|p| (w[p] - w[p + 1]) * v[p + 1].powi(2)).sum();
        let rhs = w[m2] * v[m2 + 1].powi(2) - w[q] * v[q].powi(2) + tail;
        let margin = 1e-12 - (lhs - rhs).abs();
        t.case(margin, margin >= 0.0);
    }
    Ok(t.finish("coefficients", "lemma4-summation", start))
}

/// `u^{n+s} Δu - Δ(u²)/2 ≥ 0` for the discrete operator over one family.
pub fn lemma3(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let opts = FamilyOptions::default();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x3333);
    let mut t = Tally::new();
    for _ in 0..draws {
        let n = rng.random_range(0..=50usize);
        let alpha = open_unit(&mut rng) * 0.5;
        let beta = open_unit(&mut rng) * 2.0 / 3.0;
        let (family, lead, _) = lemma_families(n)[rng.random_range(0..2)];
        let w = family_weights(family, lead, alpha, beta, opts)?;
        let u: Vec<f64> = (0..=w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let last = u[w.len()];
        let form: f64 = w
            .iter()
            .enumerate()
            .map(|(m, a)| a * (last * (u[m + 1] - u[m]) - 0.5 * (u[m + 1].powi(2) - u[m].powi(2))))
            .sum();
        t.case(form, form >= -1e-13);
    }
    Ok(t.finish("coefficients", "lemma3-energy", start))
}

pub fn coefficients(seed: u64) -> Result<Vec<PropertyReport>> {
    let [mono, lower] = lemma2(2000, seed)?;
    Ok(vec![mono, lower, endpoint_chain(2000, seed)?, lemma3(500, seed)?, lemma4(500, seed)?])
}

fn pinned_field(rng: &mut StdRng, m: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
    for j in [0, 1, m - 1, m] {
        u[j] = 0.0;
    }
    u
}

/// `L_h u` on the full node range, zero outside `2..=M-2`.
fn lh_full(u: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; u.len()];
    out[2..u.len() - 2].copy_from_slice(&apply_lh(u, h)?);
    Ok(out)
}

/// `|(L_h u, v)| ≤ (4/3)‖δ_x v‖(‖δ_x u‖ + ‖u‖)` for fields vanishing at `0, 1, M-1, M`.
pub fn lemma5(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5555);
    let mut t = Tally::new();
    for _ in 0..draws {
        let m = rng.random_range(6..=64usize);
        let grid = Grid1D::new(0.0, 1.0, m)?;
        let (u, v) = (pinned_field(&mut rng, m), pinned_field(&mut rng, m));
        let lhs = inner_product(&lh_full(&u, grid.h())?, &v, &grid)?.abs();
        let bound = 4.0 / 3.0 * delta_x_norm(&v, &grid)? * (delta_x_norm(&u, &grid)? + discrete_l2_norm(&u, &grid)?);
        let margin = bound + 1e-12 - lhs;
        t.case(margin / bound.max(1.0), margin >= 0.0);
    }
    t.note = "margin relative to the bound".into();
    Ok(t.finish("operators", "lemma5-bound", start))
}

/// `(-L_h U, U) ≥ 0.45‖δ_x U‖²` for smooth fields vanishing at `0, 1, M-1, M`, `h = 1/128`.
pub fn lemma6(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x6666);
    let mut t = Tally::new();
    let grid = Grid1D::new(0.0, 1.0, 128)?;
    let h = grid.h();
    for _ in 0..draws {
        let modes = rng.random_range(1..=4usize);
        let c: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = grid
            .xs()
            .iter()
            .map(|&x| {
                let s: f64 = c.iter().enumerate().map(|(i, ci)| ci * ((i + 1) as f64 * PI * x).sin()).sum();
                (x - h) * (1.0 - h - x) * s
            })
            .collect();
        let lu = lh_full(&u, h)?;
        let neg = -inner_product(&lu, &u, &grid)?;
        let dx2 = delta_x_norm(&u, &grid)?.powi(2);
        let margin = (neg - 0.45 * dx2) / dx2;
        t.case(margin, margin >= 0.0);
    }
    t.note = "margin relative to ‖δ_x U‖²".into();
    Ok(t.finish("operators", "lemma6-coercivity", start))
}

/// Published matrix entries against `I - sign·c·L_h`.
pub fn printed_entries(draws: usize, seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x7777);
    let mut t = Tally::new();
    for _ in 0..draws {
        let alpha = open_unit(&mut rng) * 0.5;
        let k = rng.random_range(1e-6..0.5);
        let h = rng.random_range(1e-3..0.5);
        let row = lh_row(h);
        for m in [SchemeMatrix::A0, SchemeMatrix::A1, SchemeMatrix::A, SchemeMatrix::A2] {
            let (c, sign) = m.coefficient(alpha, k);
            let printed = m.printed_row(alpha, k, h);
            let dev = (0..5)
                .map(|o| {
                    let derived = f64::from(u8::from(o == 2)) - sign * c * row[o];
                    (derived - printed[o]).abs() / derived.abs().max(1.0)
                })
                .fold(0.0, f64::max);
            let margin = 1e-12 - dev;
            t.case(margin, margin >= 0.0);
        }
    }
    Ok(t.finish("operators", "printed-entries", start))
}

pub fn operators(seed: u64) -> Result<Vec<PropertyReport>> {
    Ok(vec![lemma5(500, seed)?, lemma6(200, seed)?, printed_entries(100, seed)?])
}

/// Errors of the discrete operator against the quadrature oracle on `u = t³` for
/// `k = 1/8 ..= 1/128`, with the fitted order.
pub fn lemma1_errors(family: CoeffFamily, beta: f64, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let opts = FamilyOptions::default();
    let mut ks = Vec::new();
    let mut errs = Vec::new();
    for r in 3..=7 {
        let k = 0.5f64.powi(r);
        let lead = 1usize << r;
        let target = match family {
            CoeffFamily::Int => (lead as f64 + alpha) * k,
            CoeffFamily::Half => (lead as f64 + 0.5 + alpha) * k,
        };
        let approx = discrete_caputo_of(|t| t.powi(3), family, lead, k, alpha, beta, opts)?;
        let exact = caputo_quadrature_oracle(|t| 3.0 * t * t, beta, target, 100)?;
        ks.push(k);
        errs.push((approx - exact).abs());
    }
    Ok((ks, errs))
}

pub fn lemma1(seed: u64) -> Result<PropertyReport> {
    let _ = seed;
    let start = Instant::now();
    let mut t = Tally::new();
    let mut notes = Vec::new();
    for beta in [0.3, 0.5] {
        for family in [CoeffFamily::Int, CoeffFamily::Half] {
            let (ks, errs) = lemma1_errors(family, beta, 0.25)?;
            let order = log_slope(&ks, &errs);
            let need = 2.0 - beta - 0.25;
            t.case(order - need, order >= need);
            notes.push(format!("{family:?} beta={beta}: {order:.3}"));
        }
    }
    t.note = format!("observed orders {}", notes.join(", "));
    Ok(t.finish("oracle", "lemma1-order", start))
}

/// Every system solved during small marches against a dense solve of the same matrix.
pub fn dense_vs_banded() -> Result<PropertyReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    let problem = example1();
    for m in [6usize, 8] {
        for n in [2usize, 4] {
            for variant in [SchemeVariant::Derived, SchemeVariant::Assembled] {
                let cfg = SchemeConfig { variant, ..Default::default() };
                let grid = Grid1D::new(problem.l0, problem.l, m)?;
                let time = TimeMesh::new(problem.t_final, n, 0.25)?;
                let mut failure = None;
                march_with_observer(&problem, grid, time, cfg, &mut |rec| match dense_solve(
                    rec.matrix.to_dense(),
                    rec.rhs.to_vec(),
                ) {
                    Ok(x) => {
                        let dev = x
                            .iter()
                            .zip(&rec.solution.values()[rec.layout.unknowns()])
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        let margin = 1e-12 - dev;
                        t.case(margin, margin >= 0.0);
                    }
                    Err(e) => failure = Some(e),
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
            }
        }
    }
    Ok(t.finish("oracle", "dense-vs-banded", start))
}

/// Banded LU against GMRES on the four operator matrices.
pub fn lu_vs_gmres(seed: u64) -> Result<PropertyReport> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x8888);
    let mut t = Tally::new();
    for m in [8usize, 16] {
        let h = 1.0 / m as f64;
        let layout = SystemLayout::new(m, h, NearBoundary::ThreePoint)?;
        for k in [h.powi(4), h * h, h] {
            for which in [SchemeMatrix::A0, SchemeMatrix::A1, SchemeMatrix::A, SchemeMatrix::A2] {
                let alpha = rng.random_range(0.01..0.49);
                let (c, sign) = which.coefficient(alpha, k);
                let a = layout.operator_matrix(c.abs(), sign * c.signum())?;
                let b: Vec<f64> = (0..a.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let x = lu_solve(&a, &b)?;
                for pre in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0] {
                    let g = gmres_solve(&a, &b, &GmresConfig { preconditioner: pre, ..Default::default() })?;
                    let dev = x.iter().zip(&g.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                    let margin = 1e-8 - dev;
                    t.case(margin, margin >= 0.0);
                }
            }
        }
    }
    Ok(t.finish("oracle", "lu-vs-gmres", start))
}

/// GMRES iterations on `A0` at `h = 1/16` with and without Jacobi scaling.
/// The diagonal of `A0` is constant away from the two closure rows, so Jacobi scaling
/// barely changes the Krylov space; the check is that it never costs iterations.
pub fn jacobi_iterations() -> Result<PropertyReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    let h = 1.0 / 16.0;
    let layout = SystemLayout::new(16, h, NearBoundary::ThreePoint)?;
    let mut notes = Vec::new();
    let mut strict = true;
    for k in [h.powi(4), h * h, h] {
        let (c, sign) = SchemeMatrix::A0.coefficient(0.25, k);
        let a = layout.operator_matrix(c, sign)?;
        let b: Vec<f64> = (0..a.size()).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let iters = |p| -> Result<usize> {
            Ok(gmres_solve(&a, &b, &GmresConfig { preconditioner: p, ..Default::default() })?.iterations)
        };
        let (plain, jac) = (iters(Preconditioner::None)?, iters(Preconditioner::Jacobi)?);
        notes.push(format!("k={k:.2e}: {plain} vs {jac}"));
        t.case(plain as f64 - jac as f64, jac <= plain);
        strict &= jac < plain;
    }
    let verdict = if strict { "strictly fewer" } else { "no strict reduction" };
    t.note = format!("iterations none vs jacobi, {}; {verdict}", notes.join("; "));
    Ok(t.finish("oracle", "jacobi-iterations", start))
}

pub fn oracle(seed: u64) -> Result<Vec<PropertyReport>> {
    Ok(vec![lemma1(seed)?, dense_vs_banded()?, lu_vs_gmres(seed)?, jacobi_iterations()?])
}
