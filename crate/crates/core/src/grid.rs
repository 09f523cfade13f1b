//! Uniform space and time meshes, grid fields, norms and difference operators.
//!
//! All norms and inner products sum over the interior nodes `j = 2..=M-2`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest admissible number of space intervals.
pub const MIN_INTERVALS: usize = 4;

/// Uniform mesh `x_j = L0 + j h`, `j = 0..=M`, on `[L0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    l0: f64,
    l: f64,
    m: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(l0: f64, l: f64, m: usize) -> Result<Self> {
        if !(l0.is_finite() && l.is_finite()) || l <= l0 {
            return Err(Error::parameter(format!("interval [{l0}, {l}] is empty")));
        }
        if m < MIN_INTERVALS {
            return Err(Error::validation("M", format!("need at least {MIN_INTERVALS} space intervals, got {m}")));
        }
        Ok(Grid1D { l0, l, m, h: (l - l0) / m as f64 })
    }

    /// Grid on `[l0, l]` with the given spacing; the spacing must divide the interval.
    pub fn with_spacing(l0: f64, l: f64, h: f64) -> Result<Self> {
        let m = intervals_for(l - l0, h, "h")?;
        Self::new(l0, l, m)
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.m
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> usize {
        self.m + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.m {
            self.l
        } else {
            self.l0 + j as f64 * self.h
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.x(j)).collect()
    }

    /// Interior nodes used by norms, `2..=M-2`.
    pub fn interior(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.m - 2
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.nodes() {
            return Err(Error::Dimension { expected: self.nodes(), got: len });
        }
        Ok(())
    }
}

/// Count how many steps of size `step` fit in `span`, requiring an integer count.
pub fn intervals_for(span: f64, step: f64, field: &str) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::validation(field, format!("must be positive, got {step}")));
    }
    let q = span / step;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::validation(field, format!("{step} does not divide the interval length {span}")));
    }
    Ok(n as usize)
}

/// Position on the half-step time axis, stored as `m = 2l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Level(pub usize);

impl Level {
    /// Integer level `n`.
    pub fn whole(n: usize) -> Self {
        Level(2 * n)
    }
    /// Level `n + 1/2`.
    pub fn half(n: usize) -> Self {
        Level(2 * n + 1)
    }
    pub fn half_index(self) -> usize {
        self.0
    }
    pub fn is_whole(self) -> bool {
        self.0.is_multiple_of(2)
    }
    /// The level as a number, `m / 2`.
    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
    pub fn next(self) -> Self {
        Level(self.0 + 1)
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_whole() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}+1/2", self.0 / 2)
        }
    }
}

/// Time axis `[0, T]` with `N` full steps, half steps, and the shift `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    t_final: f64,
    n: usize,
    k: f64,
    alpha: f64,
}

impl TimeMesh {
    pub fn new(t_final: f64, n: usize, alpha: f64) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::validation("T", format!("must be positive, got {t_final}")));
        }
        if n == 0 {
            return Err(Error::validation("N", "need at least one time step"));
        }
        check_alpha(alpha)?;
        Ok(TimeMesh { t_final, n, k: t_final / n as f64, alpha })
    }

    pub fn with_step(t_final: f64, k: f64, alpha: f64) -> Result<Self> {
        let n = intervals_for(t_final, k, "k")?;
        Self::new(t_final, n, alpha)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn steps(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Time of a half-step level, `m k / 2`.
    pub fn t(&self, level: Level) -> f64 {
        if level == Level::whole(self.n) {
            self.t_final
        } else {
            level.0 as f64 * self.k / 2.0
        }
    }

    /// Shifted time `(l + alpha) k`; may exceed `T` at the last step.
    pub fn t_shifted(&self, level: Level) -> f64 {
        (level.value() + self.alpha) * self.k
    }
}

/// Reject `alpha` outside the open interval `(0, 1/2)`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::validation("alpha", format!("alpha ∈ (0, 1/2) required, got {alpha}")))
    }
}

/// Node values `x_0..x_M` at one half-step level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    values: Vec<f64>,
    level: Level,
}

impl GridField {
    pub fn new(values: Vec<f64>, level: Level) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric { message: format!("non-finite value at node {j}"), estimate: values[j] });
        }
        Ok(GridField { values, level })
    }

    pub fn zeros(grid: &Grid1D, level: Level) -> Self {
        GridField { values: vec![0.0; grid.nodes()], level }
    }

    /// Sample `f` at the nodes of `grid`.
    pub fn sample(grid: &Grid1D, level: Level, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.xs().into_iter().map(f).collect(), level)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn level(&self) -> Level {
        self.level
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for GridField {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.values[j]
    }
}

/// `(h Σ_{j=2}^{M-2} u_j²)^{1/2}`.
pub fn discrete_l2_norm(u: &[f64], grid: &Grid1D) -> Result<f64> {
    Ok(inner_product(u, u, grid)?.sqrt())
}

/// `h Σ_{j=2}^{M-2} u_j v_j`.
pub fn inner_product(u: &[f64], v: &[f64], grid: &Grid1D) -> Result<f64> {
    grid.check_len(u.len())?;
    grid.check_len(v.len())?;
    let s: f64 = grid.interior().map(|j| u[j] * v[j]).sum();
    Ok(grid.h() * s)
}

/// `(U^{l+1/2} - U^l) / (k/2)`, componentwise.
pub fn delta_t(u_next: &GridField, u_curr: &GridField, k: f64) -> Result<GridField> {
    if !(k > 0.0) {
        return Err(Error::parameter(format!("time step must be positive, got {k}")));
    }
    if u_next.len() != u_curr.len() {
        return Err(Error::Dimension { expected: u_curr.len(), got: u_next.len() });
    }
    let half = k / 2.0;
    let values = u_next.values.iter().zip(&u_curr.values).map(|(a, b)| (a - b) / half).collect();
    GridField::new(values, u_curr.level)
}

/// Half-node difference `δ_x u_{j-1/2} = (u_j - u_{j-1}) / h`, addressed by its right node `j`.
pub fn delta_x_half(u: &[f64], right: usize, h: f64) -> Result<f64> {
    if right == 0 || right >= u.len() {
        return Err(Error::Index {
            index: format!("{right}-1/2"),
            range: format!("1/2..={}-1/2", u.len().saturating_sub(1)),
        });
    }
    Ok((u[right] - u[right - 1]) / h)
}

/// `(h Σ_{j=2}^{M-1} (δ_x u_{j-1/2})²)^{1/2}`.
pub fn delta_x_norm(u: &[f64], grid: &Grid1D) -> Result<f64> {
    grid.check_len(u.len())?;
    let h = grid.h();
    let s: f64 = (2..grid.intervals()).map(|j| ((u[j] - u[j - 1]) / h).powi(2)).sum();
    Ok((h * s).sqrt())
}

/// Largest discrete L2 norm over a sequence of fields.
pub fn sup_l2_over_time<'a, I>(fields: I, grid: &Grid1D) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut best: Option<f64> = None;
    for u in fields {
        let n = discrete_l2_norm(u, grid)?;
        best = Some(best.map_or(n, |b: f64| b.max(n)));
    }
    best.ok_or_else(|| Error::parameter("sup over an empty sequence of fields"))
}

/// `log2(err_coarse / err_fine)`.
pub fn convergence_rate(err_coarse: f64, err_fine: f64) -> Result<f64> {
    if !(err_coarse > 0.0 && err_fine > 0.0) {
        return Err(Error::parameter(format!("rates need positive errors, got {err_coarse:e} and {err_fine:e}")));
    }
    Ok((err_coarse / err_fine).log2())
}
