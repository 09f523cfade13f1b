//! Shared fixtures for the benchmarks.

use mimfrac::stencil::{NearBoundary, Pentadiagonal, SchemeMatrix, SystemLayout};

/// `A0` on `M` intervals of `[0, 1]` with `k = h²`, `α = 1/4`.
pub fn a0(intervals: usize) -> Pentadiagonal {
    let h = 1.0 / intervals as f64;
    let (c, sign) = SchemeMatrix::A0.coefficient(0.25, h * h);
    SystemLayout::new(intervals, h, NearBoundary::ThreePoint)
        .and_then(|l| l.operator_matrix(c, sign))
        .expect("valid layout")
}

pub fn rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 * 0.37).sin() + 1.0).collect()
}
