//! Reference quadrature for the Caputo derivative
//! `Γ(1-β)^{-1} ∫_0^t u'(s) (t-s)^{-β} ds`.

use super::gamma;
use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const GL_POINTS: usize = 12;
const GRADING: usize = 40;

/// Integrate `g` on `[0, b]` with `panels` uniform panels, the first one graded geometrically toward 0.
fn graded(g: &impl Fn(f64) -> f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (xs, ws) = rule;
    let panel = |a: f64, c: f64| {
        let (mid, half) = ((a + c) / 2.0, (c - a) / 2.0);
        half * xs.iter().zip(ws).map(|(x, w)| w * g(mid + half * x)).sum::<f64>()
    };
    let width = b / panels as f64;
    let mut s: f64 = (1..panels).map(|i| panel(i as f64 * width, (i + 1) as f64 * width)).sum();
    let mut hi = width;
    for _ in 0..GRADING {
        s += panel(hi / 2.0, hi);
        hi /= 2.0;
    }
    s
}

/// Caputo derivative of order `beta ∈ (0,1)` at `t_target`, given the derivative `du` of `u`.
///
/// Uses `t - s = w^{1/(1-β)}`, which turns the kernel singularity into a smooth integrand:
/// `Γ(1-β)^{-1} (1-β)^{-1} ∫_0^{t^{1-β}} u'(t - w^{1/(1-β)}) dw`.
/// Panels are doubled until two successive results agree to `1e-8` relative.
pub fn caputo_quadrature_oracle(du: impl Fn(f64) -> f64, beta: f64, t_target: f64, subdivisions: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("quadrature needs beta in (0,1), got {beta}")));
    }
    if subdivisions < 100 {
        return Err(Error::parameter(format!("need at least 100 subdivisions, got {subdivisions}")));
    }
    if !(t_target >= 0.0) {
        return Err(Error::parameter(format!("target time must be nonnegative, got {t_target}")));
    }
    if t_target == 0.0 {
        return Ok(0.0);
    }
    let e = 1.0 - beta;
    let p = 1.0 / e;
    let g = |w: f64| du(t_target - w.powf(p));
    let b = t_target.powf(e);
    let scale = 1.0 / (gamma(1.0 - beta) * e);
    let rule = gauss_legendre(GL_POINTS);
    let mut panels = subdivisions;
    let mut prev = scale * graded(&g, b, panels, &rule);
    let mut diff = f64::INFINITY;
    for _ in 0..6 {
        panels *= 2;
        let cur = scale * graded(&g, b, panels, &rule);
        diff = (cur - prev).abs();
        if diff <= 1e-8 * cur.abs().max(1e-300) || diff < 1e-15 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numeric { message: "Caputo quadrature did not settle".into(), estimate: diff })
}
