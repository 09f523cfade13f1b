//! Fourth-order central stencils, the operator `L_h = δ⁴₂ₓ - δ⁴ₓ`, and pentadiagonal assembly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Second-derivative weights at offsets `-2..=2`, times `1/(12h²)`.
pub const SECOND: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
/// First-derivative weights at offsets `-2..=2`, times `1/(12h)`.
pub const FIRST: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

fn check_stencil_node(len: usize, j: usize) -> Result<()> {
    if len < 5 || j < 2 || j + 2 >= len {
        return Err(Error::Index { index: j.to_string(), range: format!("2..={}", len.saturating_sub(3)) });
    }
    Ok(())
}

fn apply_weights(u: &[f64], j: usize, w: &[f64; 5]) -> f64 {
    (0..5).filter(|&o| w[o] != 0.0).map(|o| w[o] * u[j + o - 2]).sum()
}

/// `(1/12h²)[-u_{j+2} + 16u_{j+1} - 30u_j + 16u_{j-1} - u_{j-2}]`.
pub fn stencil_second(u: &[f64], j: usize, h: f64) -> Result<f64> {
    check_stencil_node(u.len(), j)?;
    Ok(apply_weights(u, j, &SECOND) / (12.0 * h * h))
}

/// `(1/12h)[-u_{j+2} + 8u_{j+1} - 8u_{j-1} + u_{j-2}]`.
pub fn stencil_first(u: &[f64], j: usize, h: f64) -> Result<f64> {
    check_stencil_node(u.len(), j)?;
    Ok(apply_weights(u, j, &FIRST) / (12.0 * h))
}

/// Row of `L_h` at offsets `-2..=2`.
pub fn lh_row(h: f64) -> [f64; 5] {
    std::array::from_fn(|o| SECOND[o] / (12.0 * h * h) - FIRST[o] / (12.0 * h))
}

/// Row of the three-point operator `δ²ₓ - δ₀ₓ` at offsets `-2..=2`.
pub fn three_point_row(h: f64) -> [f64; 5] {
    let (a, b) = (1.0 / (h * h), 1.0 / (2.0 * h));
    [0.0, a + b, -2.0 * a, a - b, 0.0]
}

/// `L_h u` at `j = 2..=M-2`.
pub fn apply_lh(u: &[f64], h: f64) -> Result<Vec<f64>> {
    if u.len() < 5 {
        return Err(Error::Dimension { expected: 5, got: u.len() });
    }
    let row = lh_row(h);
    Ok((2..u.len() - 2).map(|j| apply_weights(u, j, &row)).collect())
}

/// Treatment of nodes `1` and `M-1`, next to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NearBoundary {
    /// Nodes 1 and M-1 are unknowns governed by the three-point operator `δ²ₓ - δ₀ₓ`.
    #[default]
    ThreePoint,
    /// `U_1 = U_0`, `U_{M-1} = U_M`.
    Pinned,
    /// Nodes 1 and M-1 take the exact solution (needs one).
    Reference,
}

/// Which nodes are unknowns, and the operator row used at each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemLayout {
    pub intervals: usize,
    pub h: f64,
    pub near: NearBoundary,
}

impl SystemLayout {
    pub fn new(intervals: usize, h: f64, near: NearBoundary) -> Result<Self> {
        if intervals < crate::grid::MIN_INTERVALS {
            return Err(Error::validation("M", format!("need at least 4 intervals, got {intervals}")));
        }
        Ok(SystemLayout { intervals, h, near })
    }

    /// First unknown node.
    pub fn first(&self) -> usize {
        match self.near {
            NearBoundary::ThreePoint => 1,
            _ => 2,
        }
    }

    /// Last unknown node.
    pub fn last(&self) -> usize {
        self.intervals - self.first()
    }

    pub fn size(&self) -> usize {
        self.last() + 1 - self.first()
    }

    pub fn unknowns(&self) -> std::ops::RangeInclusive<usize> {
        self.first()..=self.last()
    }

    pub fn is_unknown(&self, j: usize) -> bool {
        self.unknowns().contains(&j)
    }

    /// Operator row at node `j`.
    pub fn row(&self, j: usize) -> [f64; 5] {
        if j == 1 || j + 1 == self.intervals {
            three_point_row(self.h)
        } else {
            lh_row(self.h)
        }
    }

    /// Operator applied to a full field, on the unknown rows.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.unknowns().map(|j| apply_weights(u, j, &self.row(j))).collect()
    }

    /// `Σ c·L[j][o]·u_{j+o}` over neighbours `j+o` that are not unknowns.
    pub fn known_coupling(&self, c: f64, u: &[f64]) -> Vec<f64> {
        self.unknowns()
            .map(|j| {
                let row = self.row(j);
                (0..5)
                    .filter(|&o| row[o] != 0.0 && !self.is_unknown(j + o - 2))
                    .map(|o| c * row[o] * u[j + o - 2])
                    .sum()
            })
            .collect()
    }

    /// Matrix of `I - sign·c·L` on the unknowns.
    pub fn operator_matrix(&self, c: f64, sign: f64) -> Result<Pentadiagonal> {
        if !(c >= 0.0) {
            return Err(Error::parameter(format!("operator coefficient must be nonnegative, got {c}")));
        }
        let rows = self
            .unknowns()
            .map(|j| {
                let mut r = self.row(j).map(|v| -sign * c * v);
                r[2] += 1.0;
                r
            })
            .collect();
        Pentadiagonal::from_rows(rows, Provenance::StencilDerived)
    }
}

/// Origin of a pentadiagonal matrix's entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    StencilDerived,
    PaperPrinted,
}

/// Square five-band matrix; row `i` stores columns `i-2..=i+2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pentadiagonal {
    bands: Vec<[f64; 5]>,
    provenance: Provenance,
}

impl Pentadiagonal {
    /// Build from rows; entries outside the matrix are dropped.
    pub fn from_rows(mut bands: Vec<[f64; 5]>, provenance: Provenance) -> Result<Self> {
        let n = bands.len();
        if n == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        for (i, r) in bands.iter_mut().enumerate() {
            for (o, v) in r.iter_mut().enumerate() {
                let col = i as isize + o as isize - 2;
                if col < 0 || col >= n as isize {
                    *v = 0.0;
                }
            }
        }
        Ok(Pentadiagonal { bands, provenance })
    }

    pub fn identity(n: usize) -> Self {
        Pentadiagonal { bands: vec![[0.0, 0.0, 1.0, 0.0, 0.0]; n], provenance: Provenance::StencilDerived }
    }

    pub fn size(&self) -> usize {
        self.bands.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn rows(&self) -> &[[f64; 5]] {
        &self.bands
    }

    /// Entry `(i, j)`; zero off the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let o = j as isize - i as isize + 2;
        if (0..5).contains(&o) && i < self.size() && j < self.size() {
            self.bands[i][o as usize]
        } else {
            0.0
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.bands.iter().map(|r| r[2]).collect()
    }

    /// Copy with `shift` added to the diagonal.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.size() {
            return Err(Error::Dimension { expected: self.size(), got: shift.len() });
        }
        let mut out = self.clone();
        for (r, s) in out.bands.iter_mut().zip(shift) {
            r[2] += s;
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        if v.len() != n {
            return Err(Error::Dimension { expected: n, got: v.len() });
        }
        Ok((0..n)
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(n - 1);
                (lo..=hi).map(|j| self.bands[i][j + 2 - i] * v[j]).sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.bands.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// The four operator matrices of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeMatrix {
    /// `I - αk L_h`
    A0,
    /// `I + (1/2-α)k L_h`
    A1,
    /// `I - (1+4α)k/4 L_h`
    A,
    /// `I + (1-4α)k/4 L_h`
    A2,
}

impl SchemeMatrix {
    /// `(c, sign)` such that the matrix is `I - sign·c·L_h`.
    pub fn coefficient(self, alpha: f64, k: f64) -> (f64, f64) {
        match self {
            SchemeMatrix::A0 => (alpha * k, 1.0),
            SchemeMatrix::A1 => ((0.5 - alpha) * k, -1.0),
            SchemeMatrix::A => ((1.0 + 4.0 * alpha) * k / 4.0, 1.0),
            SchemeMatrix::A2 => ((1.0 - 4.0 * alpha) * k / 4.0, -1.0),
        }
    }

    /// Published first-row entries `[e, d, a, b, c]` at offsets `-2..=2`.
    pub fn printed_row(self, alpha: f64, k: f64, h: f64) -> [f64; 5] {
        let hi = 1.0 / h;
        match self {
            SchemeMatrix::A0 => [
                alpha * k / (12.0 * h) * (1.0 + hi),
                -2.0 * alpha * k / (3.0 * h) * (1.0 + 2.0 * hi),
                1.0 + 2.5 * alpha * k / (h * h),
                2.0 * alpha * k / (3.0 * h) * (1.0 - 2.0 * hi),
                alpha * k / (12.0 * h) * (-1.0 + hi),
            ],
            SchemeMatrix::A1 => {
                let q = (1.0 - 2.0 * alpha) * k;
                [
                    (-1.0 + 2.0 * alpha) * k / (24.0 * h) * (1.0 + hi),
                    q / (3.0 * h) * (1.0 + 2.0 * hi),
                    1.0 - 5.0 * q / (4.0 * h * h),
                    q / (3.0 * h) * (-1.0 + 2.0 * hi),
                    q / (24.0 * h) * (1.0 - hi),
                ]
            }
            SchemeMatrix::A => {
                let q = (1.0 + 4.0 * alpha) * k;
                [
                    q / (48.0 * h) * (1.0 + hi),
                    -q / (6.0 * h) * (1.0 + 2.0 * hi),
                    1.0 + 5.0 * q / (8.0 * h * h),
                    q / (6.0 * h) * (1.0 - 2.0 * hi),
                    q / (48.0 * h) * (-1.0 + hi),
                ]
            }
            SchemeMatrix::A2 => {
                let q = (1.0 - 4.0 * alpha) * k;
                [
                    (-1.0 + 4.0 * alpha) * k / (48.0 * h) * (1.0 + hi),
                    q / (6.0 * h) * (1.0 + 2.0 * hi),
                    1.0 - 5.0 * q / (8.0 * h * h),
                    q / (6.0 * h) * (-1.0 + 2.0 * hi),
                    q / (48.0 * h) * (1.0 - hi),
                ]
            }
        }
    }

    /// Band-Toeplitz matrix of size `n` filled with the published entries.
    pub fn printed(self, alpha: f64, k: f64, h: f64, n: usize) -> Result<Pentadiagonal> {
        Pentadiagonal::from_rows(vec![self.printed_row(alpha, k, h); n], Provenance::PaperPrinted)
    }
}

/// `I - sign·c·L_h` on the interior nodes `2..=M-2` (size `M-3`).
pub fn assemble_operator_matrix(c: f64, h: f64, sign: f64, intervals: usize) -> Result<Pentadiagonal> {
    SystemLayout::new(intervals, h, NearBoundary::Pinned)?.operator_matrix(c, sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn field(m: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let h = 1.0 / m as f64;
        ((0..=m).map(|j| f(j as f64 * h)).collect(), h)
    }

    #[test]
    fn second_derivative_exactness() {
        let (u, h) = field(8, |x| x * x);
        for j in 2..=6 {
            assert_abs_diff_eq!(stencil_second(&u, j, h).unwrap(), 2.0, epsilon = 1e-11);
        }
        let (u, h) = field(4, |x| x.powi(4));
        assert_abs_diff_eq!(stencil_second(&u, 2, h).unwrap(), 3.0, epsilon = 1e-12);
        let (u, h) = field(16, |x| x.powi(5) - 3.0 * x.powi(3));
        for j in 2..=14 {
            let x = j as f64 * h;
            assert_abs_diff_eq!(stencil_second(&u, j, h).unwrap(), 20.0 * x.powi(3) - 18.0 * x, epsilon = 1e-9);
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        use std::f64::consts::PI;
        let (u, h) = field(64, |x| (PI * x).sin());
        let bound = 10.0 * h.powi(4) * PI.powi(6) / 360.0;
        for j in 2..=62 {
            let want = -PI * PI * (PI * j as f64 * h).sin();
            assert!((stencil_second(&u, j, h).unwrap() - want).abs() <= bound);
        }
    }

    #[test]
    fn first_derivative_exactness() {
        let (u, h) = field(8, |_| 3.0);
        assert_eq!(stencil_first(&u, 4, h).unwrap(), 0.0);
        let (u, h) = field(8, |x| x);
        assert_abs_diff_eq!(stencil_first(&u, 3, h).unwrap(), 1.0, epsilon = 1e-13);
        let (u, h) = field(4, |x| x.powi(3));
        assert_abs_diff_eq!(stencil_first(&u, 2, h).unwrap(), 0.75, epsilon = 1e-14);
        let (u, h) = field(10, |x| x.powi(4));
        for j in 2..=8 {
            assert_abs_diff_eq!(stencil_first(&u, j, h).unwrap(), 4.0 * (j as f64 * h).powi(3), epsilon = 1e-12);
        }
        assert!(stencil_first(&u, 1, h).is_err());
        assert!(stencil_first(&u, 9, h).is_err());
    }

    #[test]
    fn lh_examples() {
        let (u, h) = field(8, |x| x);
        for v in apply_lh(&u, h).unwrap() {
            assert_abs_diff_eq!(v, -1.0, epsilon = 1e-12);
        }
        let (u, h) = field(8, |x| x * x);
        for (i, v) in apply_lh(&u, h).unwrap().into_iter().enumerate() {
            let x = (i + 2) as f64 * h;
            assert_abs_diff_eq!(v, 2.0 - 2.0 * x, epsilon = 1e-11);
        }
    }

    #[test]
    fn identity_when_coefficient_vanishes() {
        let p = assemble_operator_matrix(0.0, 0.125, 1.0, 8).unwrap();
        assert_eq!(p, Pentadiagonal::identity(5));
        assert!(assemble_operator_matrix(-1.0, 0.125, 1.0, 8).is_err());
    }

    #[test]
    fn corner_rows_have_fewer_entries() {
        let p = assemble_operator_matrix(0.1, 0.125, 1.0, 8).unwrap();
        assert_eq!(p.rows()[0][0], 0.0);
        assert_eq!(p.rows()[0][1], 0.0);
        assert_eq!(p.rows()[1][0], 0.0);
        assert_eq!(p.rows()[4][4], 0.0);
        assert_eq!(p.rows()[4][3], 0.0);
        assert!(p.diagonal().iter().all(|&d| d > 1.0));
    }

    #[test]
    fn matvec_matches_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let rows = (0..5).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let p = Pentadiagonal::from_rows(rows, Provenance::StencilDerived).unwrap();
        let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = p.to_dense();
        let want: Vec<f64> = d.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        for (a, b) in p.matvec(&v).unwrap().iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        assert_eq!(Pentadiagonal::identity(5).matvec(&v).unwrap(), v);
        assert_eq!(p.matvec(&[0.0; 5]).unwrap(), vec![0.0; 5]);
        assert!(p.matvec(&[0.0; 4]).is_err());
    }

    #[test]
    fn three_point_layout() {
        let l = SystemLayout::new(8, 0.125, NearBoundary::ThreePoint).unwrap();
        assert_eq!((l.first(), l.last(), l.size()), (1, 7, 7));
        let p = SystemLayout::new(8, 0.125, NearBoundary::Pinned).unwrap();
        assert_eq!((p.first(), p.last(), p.size()), (2, 6, 5));
        // three-point rows are second order: exact for quadratics
        let (u, h) = field(8, |x| x * x);
        let lu = l.apply(&u);
        assert_abs_diff_eq!(lu[0], 2.0 - 2.0 * h, epsilon = 1e-11);
        assert_abs_diff_eq!(lu[6], 2.0 - 2.0 * 7.0 * h, epsilon = 1e-11);
    }

    #[test]
    fn published_entries_match_stencil() {
        let p = SchemeMatrix::A0.printed_row(0.25, 1.0 / 256.0, 0.25);
        assert_abs_diff_eq!(p[2], 1.0 + 2.5 * 0.25 / 256.0 / 0.0625, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn printed_rows_agree(k in 1e-5f64..0.5, h in 0.01f64..0.5, alpha in 0.001f64..0.499) {
            for m in [SchemeMatrix::A0, SchemeMatrix::A1, SchemeMatrix::A, SchemeMatrix::A2] {
                let (c, s) = m.coefficient(alpha, k);
                let row = lh_row(h);
                let printed = m.printed_row(alpha, k, h);
                for o in 0..5 {
                    let derived = if o == 2 { 1.0 } else { 0.0 } - s * c * row[o];
                    prop_assert!((derived - printed[o]).abs() <= 1e-13 * derived.abs().max(1.0));
                }
            }
        }

        #[test]
        fn matrix_consistent_with_stencil(vals in proptest::collection::vec(-1.0f64..1.0, 5..30), c in 0.0f64..2.0) {
            let m = vals.len() + 3;
            let h = 1.0 / m as f64;
            let mut u = vec![0.0; m + 1];
            u[2..m - 1].copy_from_slice(&vals);
            let p = assemble_operator_matrix(c, h, 1.0, m).unwrap();
            let lu = apply_lh(&u, h).unwrap();
            for (i, v) in p.matvec(&vals).unwrap().iter().enumerate() {
                let want = vals[i] - c * lu[i];
                prop_assert!((v - want).abs() <= 1e-13 * (1.0 + c / (h * h)));
            }
        }

        #[test]
        fn lh_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let u: Vec<f64> = (0..13).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..13).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let h = 1.0 / 12.0;
            let (lu, lv, lw) = (apply_lh(&u, h).unwrap(), apply_lh(&v, h).unwrap(), apply_lh(&w, h).unwrap());
            for i in 0..lu.len() {
                prop_assert!((lw[i] - a * lu[i] - b * lv[i]).abs() <= 1e-13 * 6.0 / (h * h));
            }
        }
    }
}
