//! The two-step march: a half-step solve with `A0` followed by a full-step solve with `A`.
//!
//! Each step solves `(I - c L + diag(d)) U_new = rhs` on the unknown nodes, where `diag(d)`
//! carries the Caputo weight of any difference `δ_t U` that involves the unknown level.

use crate::error::{Error, Result};
use crate::grid::{discrete_l2_norm, Grid1D, GridField, Level, TimeMesh};
use crate::kernel::{self, CoeffFamily, FamilyOptions, HistoryBuffer, WeightBuilder};
use crate::linalg::{gmres_solve, BandedLu, SolverKind};
use crate::problems::ProblemSpec;
pub use crate::stencil::NearBoundary;
use crate::stencil::{Pentadiagonal, SchemeMatrix, SystemLayout};
use serde::{Deserialize, Serialize};

/// Which history factors the march uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SchemeVariant {
    /// Start term `αk θ0 δ_t U^0`, full-step history factor `k/4`.
    #[default]
    Derived,
    /// Start term `k θ0 δ_t U^0`, full-step history factor `k/(4(1+2α))`.
    Assembled,
}

impl SchemeVariant {
    pub fn name(self) -> &'static str {
        match self {
            SchemeVariant::Derived => "derived",
            SchemeVariant::Assembled => "assembled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(SchemeVariant::Derived),
            "assembled" => Ok(SchemeVariant::Assembled),
            other => Err(Error::validation("variant", format!("unknown variant {other:?} (derived, assembled)"))),
        }
    }

    /// Factor in front of `θ0 δ_t U^0` in the first half step.
    pub fn start_factor(self, alpha: f64, k: f64) -> f64 {
        match self {
            SchemeVariant::Derived => alpha * k,
            SchemeVariant::Assembled => k,
        }
    }

    /// Factor in front of the history sums in the full step.
    pub fn history_factor(self, alpha: f64, k: f64) -> f64 {
        match self {
            SchemeVariant::Derived => k / 4.0,
            SchemeVariant::Assembled => k / (4.0 * (1.0 + 2.0 * alpha)),
        }
    }
}

impl NearBoundary {
    pub fn name(self) -> &'static str {
        match self {
            NearBoundary::ThreePoint => "three-point",
            NearBoundary::Pinned => "pinned",
            NearBoundary::Reference => "reference",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "three-point" => Ok(NearBoundary::ThreePoint),
            "pinned" => Ok(NearBoundary::Pinned),
            "reference" => Ok(NearBoundary::Reference),
            other => Err(Error::validation(
                "near_boundary",
                format!("unknown closure {other:?} (three-point, pinned, reference)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub variant: SchemeVariant,
    pub near: NearBoundary,
    pub solver: SolverKind,
    pub family: FamilyOptions,
    /// Keep every whole-level field in the result.
    pub keep_levels: bool,
}

/// One linear system handed to the solver.
pub struct SolveRecord<'a> {
    /// Level being computed.
    pub level: Level,
    pub layout: &'a SystemLayout,
    pub matrix: &'a Pentadiagonal,
    pub rhs: &'a [f64],
    pub solution: &'a GridField,
    /// Level the step starts from.
    pub previous: &'a GridField,
    /// `δ_t U` before this step's difference is appended.
    pub history: &'a HistoryBuffer,
}

struct CachedFactor {
    shift: Vec<f64>,
    lu: BandedLu,
}

/// Solver state of a march in progress.
pub struct MarchState<'p> {
    problem: &'p ProblemSpec,
    grid: Grid1D,
    time: TimeMesh,
    cfg: SchemeConfig,
    layout: SystemLayout,
    xs: Vec<f64>,
    current: GridField,
    half: Option<GridField>,
    history: HistoryBuffer,
    builder: WeightBuilder,
    base_a0: Pentadiagonal,
    base_a: Pentadiagonal,
    cache_first: Option<CachedFactor>,
    cache_second: Option<CachedFactor>,
    scratch: Vec<f64>,
    pub solver_iterations: usize,
    pub solves: usize,
}

impl<'p> MarchState<'p> {
    pub fn new(problem: &'p ProblemSpec, grid: Grid1D, time: TimeMesh, cfg: SchemeConfig) -> Result<Self> {
        if cfg.near == NearBoundary::Reference && problem.exact.is_none() {
            return Err(Error::validation("near_boundary", "the reference closure needs an exact solution"));
        }
        let layout = SystemLayout::new(grid.intervals(), grid.h(), cfg.near)?;
        let (alpha, k) = (time.alpha(), time.k());
        let (c0, s0) = SchemeMatrix::A0.coefficient(alpha, k);
        let (c, s) = SchemeMatrix::A.coefficient(alpha, k);
        let xs = grid.xs();
        let u0: Vec<f64> = xs.iter().map(|&x| (problem.u0)(x)).collect();
        let mut current = GridField::new(u0, Level::whole(0))?;
        let mut state = MarchState {
            problem,
            grid,
            time,
            cfg,
            base_a0: layout.operator_matrix(c0, s0)?,
            base_a: layout.operator_matrix(c, s)?,
            layout,
            xs,
            current: current.clone(),
            half: None,
            history: HistoryBuffer::with_capacity(grid.nodes(), 2 * time.steps()),
            builder: WeightBuilder::new(alpha, time.steps() + 2, cfg.family)
                .stationary(problem.beta.constant.is_some()),
            cache_first: None,
            cache_second: None,
            scratch: Vec::new(),
            solver_iterations: 0,
            solves: 0,
        };
        let mut v = current.values().to_vec();
        state.apply_boundary(&mut v, 0.0);
        current = GridField::new(v, Level::whole(0))?;
        state.current = current;
        Ok(state)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn time(&self) -> &TimeMesh {
        &self.time
    }
    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }
    pub fn current(&self) -> &GridField {
        &self.current
    }
    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }
    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// Boundary values at time `t`: `U_0 = g1`, `U_M = g2`, plus the near-boundary rule.
    pub fn apply_boundary(&self, u: &mut [f64], t: f64) {
        let m = self.grid.intervals();
        u[0] = (self.problem.g1)(t);
        u[m] = (self.problem.g2)(t);
        match self.cfg.near {
            NearBoundary::ThreePoint => {}
            NearBoundary::Pinned => {
                u[1] = u[0];
                u[m - 1] = u[m];
            }
            NearBoundary::Reference => {
                if let Some(ex) = &self.problem.exact {
                    u[1] = ex(self.xs[1], t);
                    u[m - 1] = ex(self.xs[m - 1], t);
                }
            }
        }
    }

    /// `Σ_m a_m δ_t U_j^{m/2}` scaled by `θ`, for the first `terms` weights, and the weight at `terms`.
    fn weighted_sum(&mut self, family: CoeffFamily, lead: usize, j: usize, t: f64, terms: usize) -> (f64, f64) {
        let beta = self.problem.beta_at(self.xs[j], t);
        let mut w = std::mem::take(&mut self.scratch);
        self.builder.build(family, lead, beta, &mut w);
        let scale = kernel::theta_scale(self.time.k(), beta);
        let d = self.history.node(j);
        let s: f64 = w[..terms].iter().zip(&d[..terms]).map(|(a, b)| a * b).sum();
        let next = w.get(terms).copied().unwrap_or(0.0);
        self.scratch = w;
        (scale * s, scale * next)
    }

    fn source(&self, j: usize, t: f64) -> f64 {
        self.problem.f(self.xs[j], t)
    }

    fn solve_system(
        &mut self,
        second: bool,
        shift: Vec<f64>,
        rhs: &[f64],
    ) -> Result<(Vec<f64>, Option<Pentadiagonal>)> {
        let base = if second { &self.base_a } else { &self.base_a0 };
        let active = shift.iter().any(|v| *v != 0.0);
        match self.cfg.solver {
            SolverKind::BandedLu => {
                let cache = if second { &mut self.cache_second } else { &mut self.cache_first };
                let hit = matches!(cache, Some(c) if c.shift == shift);
                let matrix = if active { base.shifted(&shift)? } else { base.clone() };
                if !hit {
                    *cache = Some(CachedFactor { lu: BandedLu::factor(&matrix)?, shift });
                }
                let x = cache.as_ref().map(|c| c.lu.solve(rhs)).transpose()?.unwrap_or_default();
                Ok((x, Some(matrix)))
            }
            SolverKind::Gmres(gc) => {
                let matrix = if active { base.shifted(&shift)? } else { base.clone() };
                let out = gmres_solve(&matrix, rhs, &gc)?;
                self.solver_iterations += out.iterations;
                Ok((out.x, Some(matrix)))
            }
        }
    }

    /// Assemble and solve one step; `second` selects the full step.
    fn step(&mut self, second: bool, n: usize, observer: &mut dyn FnMut(&SolveRecord<'_>)) -> Result<GridField> {
        let (alpha, k) = (self.time.alpha(), self.time.k());
        let prev = if second {
            self.half.clone().ok_or_else(|| Error::State("full step before its half step".into()))?
        } else {
            self.current.clone()
        };
        let target = if second { Level::whole(n + 1) } else { Level::half(n) };
        let need = if second { 2 * n + 1 } else { 2 * n };
        if self.history.len() != need {
            return Err(Error::State(format!(
                "history holds {} differences, level {target} needs {need}",
                self.history.len()
            )));
        }
        let (matrix_kind, rhs_kind) =
            if second { (SchemeMatrix::A, SchemeMatrix::A2) } else { (SchemeMatrix::A0, SchemeMatrix::A1) };
        let (c_lhs, _) = matrix_kind.coefficient(alpha, k);
        let (c_rhs, s_rhs) = rhs_kind.coefficient(alpha, k);
        let u_prev = prev.values();
        let lu_prev = self.layout.apply(u_prev);

        let mut u_new = vec![0.0; self.grid.nodes()];
        self.apply_boundary(&mut u_new, self.time.t(target));
        let coupling = self.layout.known_coupling(c_lhs, &u_new);

        let size = self.layout.size();
        let mut rhs = vec![0.0; size];
        let mut shift = vec![0.0; size];
        let first = self.layout.first();
        for i in 0..size {
            let j = first + i;
            let explicit = u_prev[j] - s_rhs * c_rhs * lu_prev[i];
            let (memory, diag, load) = if second {
                let hf = self.cfg.variant.history_factor(alpha, k);
                let (t1, th) = ((n as f64 + 1.0 + alpha) * k, (n as f64 + 0.5 + alpha) * k);
                let (s1, implicit) = self.weighted_sum(CoeffFamily::Int, n + 1, j, t1, 2 * n + 1);
                let (sh, _) = self.weighted_sum(CoeffFamily::Half, n, j, th, 2 * n + 1);
                let d = hf * implicit * 2.0 / k;
                (hf * (s1 + sh), d, k / 4.0 * (self.source(j, t1) + self.source(j, th)))
            } else if n == 0 {
                let beta = self.problem.beta_at(self.xs[j], alpha * k);
                let fac = self.cfg.variant.start_factor(alpha, k);
                let d = fac * kernel::theta0(k, alpha, beta) * 2.0 / k;
                (0.0, d, k / 2.0 * self.source(j, alpha * k))
            } else {
                let t = (n as f64 + alpha) * k;
                let (s, _) = self.weighted_sum(CoeffFamily::Int, n, j, t, 2 * n);
                (k / 2.0 * s, 0.0, k / 2.0 * self.source(j, t))
            };
            rhs[i] = explicit + diag * u_prev[j] - memory + load + coupling[i];
            shift[i] = diag;
        }

        let (x, matrix) = self.solve_system(second, shift, &rhs).map_err(|e| e.at_level(target.value()))?;
        self.solves += 1;
        u_new[first..first + size].copy_from_slice(&x);
        let field = GridField::new(u_new, target).map_err(|e| e.at_level(target.value()))?;
        if let Some(m) = &matrix {
            observer(&SolveRecord {
                level: target,
                layout: &self.layout,
                matrix: m,
                rhs: &rhs,
                solution: &field,
                previous: &prev,
                history: &self.history,
            });
        }
        self.history.push_difference(&field, &prev, k)?;
        Ok(field)
    }

    /// Half step from level `n` to `n + 1/2`.
    pub fn first_step(&mut self, n: usize, observer: &mut dyn FnMut(&SolveRecord<'_>)) -> Result<&GridField> {
        if self.current.level() != Level::whole(n) {
            return Err(Error::State(format!("state is at level {}, not {n}", self.current.level())));
        }
        let u = self.step(false, n, observer)?;
        self.half = Some(u);
        Ok(self.half.as_ref().expect("just set"))
    }

    /// Full step from level `n + 1/2` to `n + 1`.
    pub fn second_step(&mut self, n: usize, observer: &mut dyn FnMut(&SolveRecord<'_>)) -> Result<&GridField> {
        if self.half.as_ref().map(|h| h.level()) != Some(Level::half(n)) {
            return Err(Error::State(format!("no half level {n}+1/2 to advance from")));
        }
        let u = self.step(true, n, observer)?;
        self.current = u;
        self.half = None;
        Ok(&self.current)
    }
}

/// Output of a complete march.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarchResult {
    pub intervals: usize,
    pub steps: usize,
    pub h: f64,
    pub k: f64,
    /// `‖U^n‖₂` for `n = 0..=N`.
    pub norms_numeric: Vec<f64>,
    /// `‖u^n‖₂` for `n = 0..=N`, when an exact solution exists.
    pub norms_exact: Option<Vec<f64>>,
    /// `‖u^n - U^n‖₂` for `n = 0..=N`, when an exact solution exists.
    pub errors: Option<Vec<f64>>,
    pub final_field: GridField,
    /// Whole-level fields, when requested.
    pub levels: Vec<GridField>,
    pub solves: usize,
    pub solver_iterations: usize,
}

impl MarchResult {
    pub fn sup_numeric(&self) -> f64 {
        self.norms_numeric.iter().copied().fold(0.0, f64::max)
    }
    pub fn sup_exact(&self) -> Option<f64> {
        self.norms_exact.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max))
    }
    pub fn sup_error(&self) -> Option<f64> {
        self.errors.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Run the march to `T`.
pub fn march(problem: &ProblemSpec, grid: Grid1D, time: TimeMesh, cfg: SchemeConfig) -> Result<MarchResult> {
    march_with_observer(problem, grid, time, cfg, &mut |_| {})
}

/// Run the march, passing every solved system to `observer`.
pub fn march_with_observer(
    problem: &ProblemSpec,
    grid: Grid1D,
    time: TimeMesh,
    cfg: SchemeConfig,
    observer: &mut dyn FnMut(&SolveRecord<'_>),
) -> Result<MarchResult> {
    let mut state = MarchState::new(problem, grid, time, cfg)?;
    let exact_at = |n: usize| -> Option<Vec<f64>> {
        let t = time.t(Level::whole(n));
        problem.exact.as_ref().map(|u| grid.xs().iter().map(|&x| u(x, t)).collect())
    };
    let mut norms_numeric = Vec::with_capacity(time.steps() + 1);
    let mut norms_exact = problem.exact.as_ref().map(|_| Vec::with_capacity(time.steps() + 1));
    let mut errors = problem.exact.as_ref().map(|_| Vec::with_capacity(time.steps() + 1));
    let mut levels = Vec::new();
    let mut record = |u: &GridField, n: usize| -> Result<()> {
        norms_numeric.push(discrete_l2_norm(u.values(), &grid)?);
        if let (Some(ex), Some(ne), Some(er)) = (exact_at(n), norms_exact.as_mut(), errors.as_mut()) {
            ne.push(discrete_l2_norm(&ex, &grid)?);
            let e: Vec<f64> = ex.iter().zip(u.values()).map(|(a, b)| a - b).collect();
            er.push(discrete_l2_norm(&e, &grid)?);
        }
        if cfg.keep_levels {
            levels.push(u.clone());
        }
        Ok(())
    };
    record(state.current(), 0)?;
    for n in 0..time.steps() {
        state.first_step(n, observer)?;
        let u = state.second_step(n, observer)?;
        record(u, n + 1)?;
    }
    Ok(MarchResult {
        intervals: grid.intervals(),
        steps: time.steps(),
        h: grid.h(),
        k: time.k(),
        norms_numeric,
        norms_exact,
        errors,
        final_field: state.current().clone(),
        levels,
        solves: state.solves,
        solver_iterations: state.solver_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{GmresConfig, Preconditioner};
    use crate::problems::{example1, resolve};

    fn mesh(m: usize, n: usize, alpha: f64) -> (Grid1D, TimeMesh) {
        (Grid1D::new(0.0, 1.0, m).unwrap(), TimeMesh::new(1.0, n, alpha).unwrap())
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = resolve("manufactured:zero").unwrap();
        for near in [NearBoundary::ThreePoint, NearBoundary::Pinned, NearBoundary::Reference] {
            for variant in [SchemeVariant::Derived, SchemeVariant::Assembled] {
                let (g, t) = mesh(8, 6, 0.3);
                let cfg = SchemeConfig { near, variant, keep_levels: true, ..Default::default() };
                let r = march(&p, g, t, cfg).unwrap();
                assert!(r.levels.iter().all(|u| u.values().iter().all(|v| *v == 0.0)));
                assert!(r.sup_error().unwrap() == 0.0);
            }
        }
    }

    #[test]
    fn boundary_values_hold() {
        let p = example1();
        let (g, t) = mesh(8, 4, 0.25);
        for near in [NearBoundary::Pinned, NearBoundary::Reference, NearBoundary::ThreePoint] {
            let cfg = SchemeConfig { near, ..Default::default() };
            let mut seen = 0;
            march_with_observer(&p, g, t, cfg, &mut |rec| {
                let u = rec.solution.values();
                let time = t.t(rec.level);
                assert_eq!(u[0], (p.g1)(time));
                assert_eq!(u[8], (p.g2)(time));
                match near {
                    NearBoundary::Pinned => assert!(u[1] == u[0] && u[7] == u[8]),
                    NearBoundary::Reference => {
                        let ex = p.exact.as_ref().unwrap();
                        assert!(u[1] == ex(g.x(1), time) && u[7] == ex(g.x(7), time));
                    }
                    NearBoundary::ThreePoint => {}
                }
                seen += 1;
            })
            .unwrap();
            assert_eq!(seen, 8);
        }
    }

    #[test]
    fn levels_advance_by_half() {
        let p = example1();
        let (g, t) = mesh(6, 3, 0.25);
        let mut got = Vec::new();
        march_with_observer(&p, g, t, SchemeConfig::default(), &mut |rec| {
            assert_eq!(rec.history.len(), rec.level.half_index() - 1);
            got.push(rec.level.half_index())
        })
        .unwrap();
        assert_eq!(got, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn steps_out_of_order_rejected() {
        let p = example1();
        let (g, t) = mesh(6, 3, 0.25);
        let mut s = MarchState::new(&p, g, t, SchemeConfig::default()).unwrap();
        assert!(s.second_step(0, &mut |_| {}).is_err());
        assert!(s.first_step(1, &mut |_| {}).is_err());
        s.first_step(0, &mut |_| {}).unwrap();
        s.second_step(0, &mut |_| {}).unwrap();
        assert_eq!(s.current().level(), Level::whole(1));
    }

    #[test]
    fn reference_needs_exact() {
        let mut p = example1();
        p.exact = None;
        let (g, t) = mesh(6, 3, 0.25);
        let cfg = SchemeConfig { near: NearBoundary::Reference, ..Default::default() };
        assert!(MarchState::new(&p, g, t, cfg).is_err());
    }

    #[test]
    fn gmres_and_lu_agree() {
        let p = example1();
        let (g, t) = mesh(16, 8, 0.25);
        let lu = march(&p, g, t, SchemeConfig::default()).unwrap();
        for pc in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0] {
            let solver = SolverKind::Gmres(GmresConfig { preconditioner: pc, rel_tol: 1e-13, ..Default::default() });
            let gm = march(&p, g, t, SchemeConfig { solver, ..Default::default() }).unwrap();
            for (a, b) in lu.final_field.values().iter().zip(gm.final_field.values()) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!(gm.solver_iterations > 0);
        }
    }

    #[test]
    fn self_convergence() {
        let p = resolve("manufactured:sine-variable").unwrap();
        let e: Vec<f64> = [4, 8]
            .iter()
            .map(|&m| {
                let (g, t) = mesh(m, m * m, 0.25);
                march(&p, g, t, SchemeConfig::default()).unwrap().sup_error().unwrap()
            })
            .collect();
        assert!(e[1] < e[0] / 2.0, "{e:?}");
    }

    #[test]
    fn names_parse() {
        for v in [SchemeVariant::Derived, SchemeVariant::Assembled] {
            assert_eq!(SchemeVariant::parse(v.name()).unwrap(), v);
        }
        for c in [NearBoundary::ThreePoint, NearBoundary::Pinned, NearBoundary::Reference] {
            assert_eq!(NearBoundary::parse(c.name()).unwrap(), c);
        }
        assert!(SchemeVariant::parse("x").is_err());
    }
}
