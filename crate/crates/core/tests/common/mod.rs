//! Dense reference march assembled from scratch with scalar loops.

#![allow(clippy::needless_range_loop)]

use mimfrac::grid::{Grid1D, TimeMesh};
use mimfrac::problems::ProblemSpec;
use mimfrac::scheme::{march_with_observer, SchemeConfig, SchemeVariant};
use mimfrac::stencil::NearBoundary;
use statrs::function::gamma::gamma;

fn pw(b: f64, e: f64) -> f64 {
    b.powf(e)
}

fn dt(d: f64, b: f64) -> f64 {
    pw(d, 1.0 - b) - pw(d - 1.0, 1.0 - b)
}

fn ft(d: f64, b: f64) -> f64 {
    2.0 / (2.0 - b) * (pw(d, 2.0 - b) - pw(d - 1.0, 2.0 - b)) - 0.5 * (pw(d, 1.0 - b) + 3.0 * pw(d - 1.0, 1.0 - b))
}

/// Weights on `δ_t U^{l}`, `l = 0, 1/2, ..`, for the operator at `(n+α)k`.
fn int_weights(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut w = Vec::new();
    for i in 0..n {
        let d = n as f64 + a - i as f64;
        w.push(dt(d, b) - ft(d, b));
        w.push(ft(d, b));
    }
    if let Some(last) = w.last_mut() {
        *last += pw(a, 1.0 - b);
    }
    w
}

/// Weights for the operator at `(n+1/2+α)k`.
fn half_weights(n: usize, a: f64, b: f64) -> Vec<f64> {
    if n == 0 {
        return vec![0.5 * pw(a, -b)];
    }
    let mut w = vec![pw(n as f64 + 0.5 + a, 1.0 - b) - pw(n as f64 + a, 1.0 - b)];
    for i in 0..n {
        let d = n as f64 + a - i as f64;
        w.push(dt(d, b) - ft(d, b));
        w.push(ft(d, b));
    }
    *w.last_mut().unwrap() += pw(a, 1.0 - b);
    w
}

fn theta(k: f64, b: f64) -> f64 {
    pw(k, 1.0 - b) / gamma(2.0 - b)
}

fn gauss(mut a: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let n = r.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                a[i][j] -= f * a[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / a[i][i];
    }
    x
}

struct Oracle<'a> {
    p: &'a ProblemSpec,
    m: usize,
    h: f64,
    k: f64,
    a: f64,
    assembled: bool,
    near: NearBoundary,
    /// Every level so far, `U^{l}` at index `2l`.
    levels: Vec<Vec<f64>>,
}

impl Oracle<'_> {
    fn x(&self, j: usize) -> f64 {
        self.p.l0 + j as f64 * self.h
    }

    /// Spatial operator row at node `j` as `(offset, weight)` pairs.
    fn op(&self, j: usize) -> Vec<(isize, f64)> {
        let h = self.h;
        if j == 1 || j == self.m - 1 {
            vec![(-1, 1.0 / (h * h) + 1.0 / (2.0 * h)), (0, -2.0 / (h * h)), (1, 1.0 / (h * h) - 1.0 / (2.0 * h))]
        } else {
            let s = [-1.0, 16.0, -30.0, 16.0, -1.0];
            let f = [1.0, -8.0, 0.0, 8.0, -1.0];
            (0..5).map(|o| (o as isize - 2, s[o] / (12.0 * h * h) - f[o] / (12.0 * h))).collect()
        }
    }

    fn apply(&self, u: &[f64], j: usize) -> f64 {
        self.op(j).iter().map(|&(o, w)| w * u[(j as isize + o) as usize]).sum()
    }

    fn dtu(&self, l2: usize, j: usize) -> f64 {
        (self.levels[l2 + 1][j] - self.levels[l2][j]) / (self.k / 2.0)
    }

    /// Solve for level index `target` (half-steps) from the previous level.
    fn advance(&mut self) -> Vec<f64> {
        let (m, k, a) = (self.m, self.k, self.a);
        let target = self.levels.len();
        let t_new = (target as f64 / 2.0) * k;
        let t_new = if target == 2 * ((self.p.t_final / k).round() as usize) { self.p.t_final } else { t_new };
        let prev = self.levels[target - 1].clone();
        let second = target.is_multiple_of(2);
        let n = (target - 1) / 2;
        let (c_lhs, c_rhs) =
            if second { ((1.0 + 4.0 * a) * k / 4.0, (1.0 - 4.0 * a) * k / 4.0) } else { (a * k, (0.5 - a) * k) };
        let mut mat = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        mat[0][0] = 1.0;
        rhs[0] = (self.p.g1)(t_new);
        mat[m][m] = 1.0;
        rhs[m] = (self.p.g2)(t_new);
        for j in 1..m {
            let near = j == 1 || j == m - 1;
            if near && self.near == NearBoundary::Pinned {
                let b = if j == 1 { 0 } else { m };
                mat[j][j] = 1.0;
                mat[j][b] = -1.0;
                continue;
            }
            if near && self.near == NearBoundary::Reference {
                mat[j][j] = 1.0;
                rhs[j] = (self.p.exact.as_ref().unwrap())(self.x(j), t_new);
                continue;
            }
            let x = self.x(j);
            mat[j][j] += 1.0;
            for (o, w) in self.op(j) {
                mat[j][(j as isize + o) as usize] -= c_lhs * w;
            }
            let mut r = prev[j] + c_rhs * self.apply(&prev, j);
            if !second && n == 0 {
                // A0 U + F θ0 (U - U^0)/(k/2) = A1 U^0 + (k/2) f
                let b = self.p.beta_at(x, a * k);
                let f = if self.assembled { k } else { a * k };
                let d = f * theta(k, b) * 0.5 * pw(a, -b) / (k / 2.0);
                mat[j][j] += d;
                r += d * prev[j] + k / 2.0 * self.p.f(x, a * k);
            } else if !second {
                let t = (n as f64 + a) * k;
                let b = self.p.beta_at(x, t);
                let w = int_weights(n, a, b);
                let s: f64 = (0..2 * n).map(|l2| w[l2] * self.dtu(l2, j)).sum();
                r += -k / 2.0 * theta(k, b) * s + k / 2.0 * self.p.f(x, t);
            } else {
                let hf = if self.assembled { k / (4.0 * (1.0 + 2.0 * a)) } else { k / 4.0 };
                let (t1, th) = ((n as f64 + 1.0 + a) * k, (n as f64 + 0.5 + a) * k);
                let (b1, bh) = (self.p.beta_at(x, t1), self.p.beta_at(x, th));
                let w1 = int_weights(n + 1, a, b1);
                let wh = half_weights(n, a, bh);
                let s1: f64 = (0..2 * n + 1).map(|l2| w1[l2] * self.dtu(l2, j)).sum();
                let sh: f64 = (0..2 * n + 1).map(|l2| wh[l2] * self.dtu(l2, j)).sum();
                // the l = n+1/2 term of the first sum holds the unknown
                let d = hf * theta(k, b1) * w1[2 * n + 1] / (k / 2.0);
                mat[j][j] += d;
                r += d * prev[j] - hf * (theta(k, b1) * s1 + theta(k, bh) * sh)
                    + k / 4.0 * (self.p.f(x, t1) + self.p.f(x, th));
            }
            rhs[j] = r;
        }
        let u = gauss(mat, rhs);
        self.levels.push(u.clone());
        u
    }
}

/// Largest deviation between the march and the dense reference over every solved level.
pub fn compare(p: &ProblemSpec, m: usize, steps: usize, variant: SchemeVariant, near: NearBoundary) -> f64 {
    let a = 0.25;
    let grid = Grid1D::new(p.l0, p.l, m).unwrap();
    let time = TimeMesh::new(p.t_final, steps, a).unwrap();
    let cfg = SchemeConfig { variant, near, ..Default::default() };
    let mut solved = Vec::new();
    march_with_observer(p, grid, time, cfg, &mut |rec| solved.push(rec.solution.values().to_vec())).unwrap();
    let h = (p.l - p.l0) / m as f64;
    let mut u0: Vec<f64> = (0..=m).map(|j| (p.u0)(p.l0 + j as f64 * h)).collect();
    u0[0] = (p.g1)(0.0);
    u0[m] = (p.g2)(0.0);
    match near {
        NearBoundary::Pinned => {
            u0[1] = u0[0];
            u0[m - 1] = u0[m];
        }
        NearBoundary::Reference => {
            let ex = p.exact.as_ref().unwrap();
            u0[1] = ex(p.l0 + h, 0.0);
            u0[m - 1] = ex(p.l - h, 0.0);
        }
        NearBoundary::ThreePoint => {}
    }
    let mut oracle = Oracle {
        p,
        m,
        h,
        k: p.t_final / steps as f64,
        a,
        assembled: variant == SchemeVariant::Assembled,
        near,
        levels: vec![u0],
    };
    assert_eq!(solved.len(), 2 * steps);
    let mut worst: f64 = 0.0;
    for got in &solved {
        let want = oracle.advance();
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    worst
}
