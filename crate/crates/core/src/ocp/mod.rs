//! Linear-quadratic optimal control of periodic transport.
//!
//! The state obeys `x_t = -c x_ω + B u + f` on a circle of length `L`, the
//! cost is `½∫ ||C(x - x_ref)||² + α² ||u - u_ref||²`. Eliminating the
//! control through `u = u_ref + Bᵀλ / α²` leaves a coupled forward/backward
//! system in `(x, λ)`, discretized with central differences in space and
//! the implicit midpoint rule in time. Perturbations `ε = (ε1, ε2, ε3, ε4)`
//! enter the adjoint equation, the terminal costate, the state equation and
//! the initial state.

mod kkt;
mod reduced;
mod sparse;
mod tridiag;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristics::{FlowError, VelocityField, VelocitySpec};
use crate::geometry::{indicator_on_grid, GeometryError, Grid1D, GridFunction, IntervalUnion, SpaceTimeField, TimeGrid};

use kkt::{Operators, SystemData};
pub use sparse::SparseMatrix;
pub use tridiag::{CyclicFactor, CyclicTridiagonal};

/// Systems with more unknowns than this go to the iterative solver under
/// [`SolverKind::Auto`].
pub const DIRECT_UNKNOWN_LIMIT: usize = 300_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("singular or ill-conditioned system: relative residual {residual:e}, condition estimate {condition_estimate:e}")]
    Singular { residual: f64, condition_estimate: f64 },
    #[error("conjugate gradients stalled after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse LU of the full space-time system.
    Direct,
    /// Conjugate gradients on the midpoint controls.
    Iterative,
    #[default]
    Auto,
}

/// A transport-constrained control problem on one grid.
#[derive(Debug, Clone)]
pub struct OcpConfig {
    pub grid: Grid1D,
    pub time: TimeGrid,
    pub velocity: VelocityField,
    pub alpha: f64,
    pub control: IntervalUnion,
    /// `None` observes all of `[0, L]`.
    pub observation: Option<IntervalUnion>,
    pub x0: GridFunction,
    pub x_ref: Option<GridFunction>,
    pub u_ref: Option<GridFunction>,
    pub forcing: Option<SpaceTimeField>,
    pub solver: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl OcpConfig {
    pub fn new(grid: Grid1D, time: TimeGrid, velocity: VelocityField, alpha: f64, control: IntervalUnion, x0: GridFunction) -> Self {
        Self {
            grid,
            time,
            velocity,
            alpha,
            control,
            observation: None,
            x0,
            x_ref: None,
            u_ref: None,
            forcing: None,
            solver: SolverKind::Auto,
            tol: 1e-10,
            max_iter: 20_000,
        }
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn unknowns(&self) -> usize {
        2 * self.grid.cells() * self.time.levels()
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(OcpError::InvalidConfig(format!("control weight must be positive, got {}", self.alpha)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(OcpError::InvalidConfig(format!("tolerance must lie in (0, 1), got {}", self.tol)));
        }
        self.velocity.validate_on(self.grid.length())?;
        let same = |g: &GridFunction, what: &str| {
            if g.grid() == self.grid {
                Ok(())
            } else {
                Err(OcpError::InvalidConfig(format!("{what} lives on a different grid")))
            }
        };
        same(&self.x0, "initial state")?;
        if let Some(g) = &self.x_ref {
            same(g, "state reference")?;
        }
        if let Some(g) = &self.u_ref {
            same(g, "control reference")?;
        }
        if let Some(f) = &self.forcing {
            if f.grid() != self.grid || f.time() != self.time {
                return Err(OcpError::InvalidConfig("forcing shape does not match the grids".into()));
            }
        }
        Ok(())
    }

    fn operators(&self) -> Operators {
        let grid = self.grid;
        let l = grid.length();
        let c: Vec<f64> = grid.nodes().iter().map(|&w| self.velocity.periodic(w, l)).collect();
        let a = CyclicTridiagonal::advection(&c, grid.h());
        let at = a.transpose();
        let b = indicator_on_grid(&self.control, grid).values().iter().map(|v| v.sqrt()).collect();
        let q = match &self.observation {
            Some(dom) => indicator_on_grid(dom, grid).into_values(),
            None => vec![1.0; grid.cells()],
        };
        Operators {
            n: grid.cells(),
            m: self.time.steps(),
            dt: self.time.dt(),
            a,
            at,
            b,
            q,
            alpha2: self.alpha * self.alpha,
        }
    }

    fn data(&self, ops: &Operators, eps: Option<&Perturbation>, with_problem_data: bool) -> SystemData {
        let (n, m) = (ops.n, ops.m);
        let mut state_src = vec![0.0; n * m];
        let mut adjoint_src = vec![0.0; n * m];
        let avg = |f: &SpaceTimeField, dst: &mut [f64]| {
            for step in 0..m {
                let (r0, r1) = (f.row(step), f.row(step + 1));
                for i in 0..n {
                    dst[step * n + i] += 0.5 * (r0[i] + r1[i]);
                }
            }
        };
        let zeros = vec![0.0; n];
        let mut x0 = zeros.clone();
        let mut u_ref = zeros.clone();
        if with_problem_data {
            x0.copy_from_slice(self.x0.values());
            if let Some(f) = &self.forcing {
                avg(f, &mut state_src);
            }
            if let Some(xr) = &self.x_ref {
                for step in 0..m {
                    for i in 0..n {
                        adjoint_src[step * n + i] += ops.q[i] * xr.values()[i];
                    }
                }
            }
            if let Some(ur) = &self.u_ref {
                u_ref.copy_from_slice(ur.values());
            }
        }
        let mut lambda_end = zeros;
        if let Some(e) = eps {
            avg(&e.eps3, &mut state_src);
            avg(&e.eps1, &mut adjoint_src);
            for (x, d) in x0.iter_mut().zip(e.eps4.values()) {
                *x += d;
            }
            lambda_end.copy_from_slice(e.eps2.values());
        }
        SystemData {
            x0,
            lambda_end,
            state_src,
            adjoint_src,
            u_ref,
        }
    }
}

/// Residuals `ε1, ε3` of the adjoint and state equations, terminal costate
/// `ε2` and initial state `ε4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub eps1: SpaceTimeField,
    pub eps2: GridFunction,
    pub eps3: SpaceTimeField,
    pub eps4: GridFunction,
}

impl Perturbation {
    pub fn zeros(grid: Grid1D, time: TimeGrid) -> Self {
        Self {
            eps1: SpaceTimeField::zeros(grid, time),
            eps2: GridFunction::zeros(grid),
            eps3: SpaceTimeField::zeros(grid, time),
            eps4: GridFunction::zeros(grid),
        }
    }

    /// Independent uniform entries in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(grid: Grid1D, time: TimeGrid, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(grid, time);
        for v in p
            .eps1
            .data_mut()
            .iter_mut()
            .chain(p.eps2.values_mut())
            .chain(p.eps3.data_mut())
            .chain(p.eps4.values_mut())
        {
            *v = scale * rng.random_range(-1.0..=1.0);
        }
        p
    }

    fn check(&self, config: &OcpConfig) -> Result<(), OcpError> {
        let ok = self.eps1.grid() == config.grid
            && self.eps3.grid() == config.grid
            && self.eps1.time() == config.time
            && self.eps3.time() == config.time
            && self.eps2.grid() == config.grid
            && self.eps4.grid() == config.grid;
        if ok {
            Ok(())
        } else {
            Err(OcpError::InvalidConfig("perturbation shape does not match the grids".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcpSolution {
    pub x: SpaceTimeField,
    pub lambda: SpaceTimeField,
    /// `u_ref + Bᵀλ / α²` at every level; equals `u_ref` off the control set.
    pub u: SpaceTimeField,
    pub objective: f64,
    /// Normwise backward error `||K z - r|| / (||K||_inf ||z|| + ||r||)` of the space-time system.
    pub residual: f64,
    pub solver: SolverKind,
    pub iterations: usize,
}

impl OcpSolution {
    /// Midpoint controls `(u^m + u^{m+1}) / 2`, one row per interval.
    pub fn midpoint_controls(&self) -> Vec<f64> {
        let n = self.u.grid().cells();
        let m = self.u.time().steps();
        let mut out = vec![0.0; n * m];
        for step in 0..m {
            let (a, b) = (self.u.row(step), self.u.row(step + 1));
            for i in 0..n {
                out[step * n + i] = 0.5 * (a[i] + b[i]);
            }
        }
        out
    }
}

/// `A_h = -diag(c(ω_i)) D_h` with the periodic central difference `D_h`.
pub fn build_advection_matrix(grid: Grid1D, velocity: &VelocityField) -> SparseMatrix {
    let n = grid.cells();
    let l = grid.length();
    let mut trip = Vec::with_capacity(2 * n);
    for i in 0..n {
        let c = velocity.periodic(grid.node(i), l) / (2.0 * grid.h());
        trip.push((i, (i + n - 1) % n, c));
        trip.push((i, (i + 1) % n, -c));
    }
    SparseMatrix::from_triplets(n, n, trip)
}

/// The space-time system over `(x^0..x^M, λ^0..λ^M)` and its right-hand side.
pub fn assemble_kkt(config: &OcpConfig, perturbation: Option<&Perturbation>) -> Result<(SparseMatrix, Vec<f64>), OcpError> {
    config.validate()?;
    if let Some(p) = perturbation {
        p.check(config)?;
    }
    let ops = config.operators();
    let data = config.data(&ops, perturbation, true);
    Ok((ops.assemble(), ops.rhs(&data)))
}

/// Product of the space-time matrix with `z`, without assembling it.
pub fn apply_kkt(config: &OcpConfig, z: &[f64]) -> Result<Vec<f64>, OcpError> {
    config.validate()?;
    if z.len() != config.unknowns() {
        return Err(OcpError::InvalidConfig(format!("expected {} unknowns, got {}", config.unknowns(), z.len())));
    }
    Ok(config.operators().apply(z))
}

pub fn solve_ocp(config: &OcpConfig) -> Result<OcpSolution, OcpError> {
    solve_system(config, None, true)
}

/// Optimal solution with the disturbed optimality system.
pub fn solve_perturbed(config: &OcpConfig, perturbation: &Perturbation) -> Result<OcpSolution, OcpError> {
    perturbation.check(config)?;
    solve_system(config, Some(perturbation), true)
}

/// Response `(δx, δλ, δu)` to `ε` alone: zero initial state, forcing and references.
pub fn solve_error_system(config: &OcpConfig, perturbation: &Perturbation) -> Result<OcpSolution, OcpError> {
    perturbation.check(config)?;
    solve_system(config, Some(perturbation), false)
}

fn solve_system(config: &OcpConfig, eps: Option<&Perturbation>, with_data: bool) -> Result<OcpSolution, OcpError> {
    config.validate()?;
    let ops = config.operators();
    let data = config.data(&ops, eps, with_data);
    let kind = match config.solver {
        SolverKind::Auto if config.unknowns() <= DIRECT_UNKNOWN_LIMIT => SolverKind::Direct,
        SolverKind::Auto => SolverKind::Iterative,
        k => k,
    };
    let (z, iterations) = match kind {
        SolverKind::Direct => (kkt::solve_direct(&ops, &data)?.0, 0),
        _ => {
            let out = reduced::solve_reduced(&ops, &data, config.tol, config.max_iter)?;
            (out.z, out.iterations)
        }
    };
    let residual = ops.residual(&z, &ops.rhs(&data));
    if !residual.is_finite() {
        return Err(OcpError::Numeric("solution contains non-finite values".into()));
    }
    let (n, levels) = (ops.n, config.time.levels());
    let (xs, ls) = z.split_at(n * levels);
    let rows = |v: &[f64]| v.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let x = SpaceTimeField::from_rows(config.grid, config.time, rows(xs))?;
    let lambda = SpaceTimeField::from_rows(config.grid, config.time, rows(ls))?;
    let mut u = SpaceTimeField::zeros(config.grid, config.time);
    for lvl in 0..levels {
        let (lam, row) = (lambda.row(lvl).to_vec(), u.row_mut(lvl));
        for i in 0..n {
            row[i] = data.u_ref[i] + ops.b[i] * lam[i] / ops.alpha2;
        }
    }
    let mut sol = OcpSolution {
        x,
        lambda,
        u,
        objective: 0.0,
        residual,
        solver: kind,
        iterations,
    };
    sol.objective = objective_of(config, &ops, &data, sol.x.data(), &sol.midpoint_controls());
    Ok(sol)
}

fn objective_of(config: &OcpConfig, ops: &Operators, data: &SystemData, x: &[f64], u_mid: &[f64]) -> f64 {
    let (n, m, dt) = (ops.n, ops.m, ops.dt);
    let h = config.grid.h();
    let x_ref = config.x_ref.as_ref().map(GridFunction::values);
    let mut total = 0.0;
    for step in 0..m {
        let mut s = 0.0;
        for i in 0..n {
            let xbar = 0.5 * (x[step * n + i] + x[(step + 1) * n + i]) - x_ref.map_or(0.0, |r| r[i]);
            let du = u_mid[step * n + i] - data.u_ref[i];
            s += ops.q[i] * xbar * xbar + ops.alpha2 * du * du;
        }
        total += dt * h * s;
    }
    0.5 * total
}

/// Discrete cost of the midpoint controls `u` (`M × N`, row-major), with
/// the state obtained from the midpoint stepper.
pub fn objective_for_controls(config: &OcpConfig, controls: &[f64]) -> Result<f64, OcpError> {
    config.validate()?;
    let ops = config.operators();
    if controls.len() != ops.n * ops.m {
        return Err(OcpError::InvalidConfig(format!("expected {} control values, got {}", ops.n * ops.m, controls.len())));
    }
    let data = config.data(&ops, None, true);
    let x = reduced::state_for_controls(&ops, &data, controls)?;
    Ok(objective_of(config, &ops, &data, &x, controls))
}

/// Cost with the control switched off.
pub fn uncontrolled_objective(config: &OcpConfig) -> Result<f64, OcpError> {
    objective_for_controls(config, &vec![0.0; config.grid.cells() * config.time.steps()])
}

/// Midpoint run of `x_t = (A_h - diag(gain)) x`, i.e. the feedback `u = -k x`.
pub fn closed_loop_midpoint(
    x0: &GridFunction,
    velocity: &VelocityField,
    gain: Option<&GridFunction>,
    time: TimeGrid,
) -> Result<SpaceTimeField, OcpError> {
    let grid = x0.grid();
    velocity.validate_on(grid.length())?;
    if let Some(g) = gain {
        if g.grid() != grid {
            return Err(OcpError::InvalidConfig("gain lives on a different grid".into()));
        }
    }
    let c: Vec<f64> = grid.nodes().iter().map(|&w| velocity.periodic(w, grid.length())).collect();
    let a = CyclicTridiagonal::advection(&c, grid.h());
    let k = gain.map(GridFunction::values);
    let half = 0.5 * time.dt();
    let implicit = a.shifted(1.0, -half, k).factor()?;
    let explicit = a.shifted(1.0, half, k);
    let n = grid.cells();
    let mut field = SpaceTimeField::zeros(grid, time);
    field.row_mut(0).copy_from_slice(x0.values());
    let mut buf = vec![0.0; n];
    for step in 0..time.steps() {
        explicit.apply(field.row(step), &mut buf);
        implicit.solve_in_place(&mut buf);
        field.row_mut(step + 1).copy_from_slice(&buf);
    }
    Ok(field)
}

/// `e^{μ(ω)}` with `μ(ω) = 1 + 1/(((2/w)(ω - center))² - 1)` inside the open
/// window of width `w`, zero outside.
pub fn bump_value(w: f64, center: f64, width: f64) -> f64 {
    let s = 2.0 * (w - center) / width;
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 + 1.0 / (s2 - 1.0)).exp()
    }
}

pub fn bump_initial(width: f64, center: f64, grid: Grid1D) -> Result<GridFunction, OcpError> {
    if !(width > 0.0 && width.is_finite() && center.is_finite()) {
        return Err(OcpError::InvalidConfig(format!("bump width {width} and center {center} must be finite, width positive")));
    }
    let (lo, hi) = (center - 0.5 * width, center + 0.5 * width);
    if lo < 0.0 || hi > grid.length() {
        return Err(OcpError::InvalidConfig(format!(
            "bump window [{lo}, {hi}] escapes [0, {}]",
            grid.length()
        )));
    }
    Ok(GridFunction::from_fn(grid, |w| bump_value(w, center, width)))
}

/// Initial state description in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    Bump { center: f64, width: f64 },
    Zero,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self::Bump { center: 0.6, width: 0.8 }
    }
}

fn default_alpha() -> f64 {
    0.125
}
fn default_per_unit() -> usize {
    128
}
fn default_courant() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}

/// File-level description of a control problem; [`OcpSpec::build`] turns it
/// into an [`OcpConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcpSpec {
    pub length: f64,
    pub horizon: f64,
    #[serde(default = "default_per_unit")]
    pub cells_per_unit: usize,
    /// Overrides `cells_per_unit` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Overrides the Courant-based step count when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Target `max(c) dt / h`.
    #[serde(default = "default_courant")]
    pub courant: f64,
    #[serde(default)]
    pub velocity: VelocitySpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub control: IntervalUnion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<IntervalUnion>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl OcpSpec {
    pub fn build(&self) -> Result<OcpConfig, OcpError> {
        let grid = match self.cells {
            Some(n) => Grid1D::new(self.length, n)?,
            None => Grid1D::with_resolution(self.length, self.cells_per_unit)?,
        };
        let velocity = self.velocity.build()?;
        let time = match self.steps {
            Some(m) => TimeGrid::new(self.horizon, m)?,
            None => {
                if !(self.courant > 0.0 && self.courant.is_finite()) {
                    return Err(OcpError::InvalidConfig(format!("courant number must be positive, got {}", self.courant)));
                }
                TimeGrid::with_max_step(self.horizon, self.courant * grid.h() / velocity.c_max())?
            }
        };
        let x0 = match self.initial {
            InitialSpec::Bump { center, width } => bump_initial(width, center, grid)?,
            InitialSpec::Zero => GridFunction::zeros(grid),
        };
        let mut cfg = OcpConfig::new(grid, time, velocity, self.alpha, self.control.clone(), x0).with_solver(self.solver);
        cfg.observation = self.observation.clone();
        cfg.tol = self.tol;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(control: IntervalUnion, solver: SolverKind) -> OcpConfig {
        let grid = Grid1D::new(2.0, 32).unwrap();
        let time = TimeGrid::new(1.0, 24).unwrap();
        let x0 = bump_initial(0.8, 0.6, grid).unwrap();
        OcpConfig::new(grid, time, VelocityField::constant(2.0).unwrap(), 0.5, control, x0).with_solver(solver)
    }

    #[test]
    fn advection_stencil() {
        let a = build_advection_matrix(Grid1D::new(1.0, 4).unwrap(), &VelocityField::constant(1.0).unwrap());
        assert_eq!((0..4).map(|j| a.get(0, j)).collect::<Vec<_>>(), vec![0.0, -2.0, 0.0, 2.0]);
        let at = a.transpose();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j) + at.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn matrix_free_apply_matches_assembly() {
        let mut cfg = small(IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap(), SolverKind::Direct);
        cfg.observation = Some(IntervalUnion::single(0.3, 1.5).unwrap());
        cfg.velocity = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
        let (k, _) = assemble_kkt(&cfg, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z: Vec<f64> = (0..cfg.unknowns()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = k.matvec(&z);
        let b = apply_kkt(&cfg, &z).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn direct_and_iterative_agree() {
        let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap();
        let d = solve_ocp(&small(dom.clone(), SolverKind::Direct)).unwrap();
        let it = solve_ocp(&small(dom, SolverKind::Iterative)).unwrap();
        assert!(d.residual < 1e-10 && it.residual < 1e-8, "{} {}", d.residual, it.residual);
        let diff = d.x.difference(&it.x).unwrap().max_abs();
        assert!(diff < 1e-8, "{diff}");
        assert!((d.objective - it.objective).abs() < 1e-9 * d.objective);
        assert!(it.iterations > 0);
    }

    #[test]
    fn boundary_rows_and_control_law_hold() {
        let s = solve_ocp(&small(IntervalUnion::single(0.2, 0.9).unwrap(), SolverKind::Direct)).unwrap();
        let x0 = bump_initial(0.8, 0.6, s.x.grid()).unwrap();
        assert_eq!(s.x.row(0), x0.values());
        let m = s.x.time().steps();
        assert!(s.lambda.row(m).iter().all(|v| v.abs() < 1e-14));
        let ctrl = indicator_on_grid(&IntervalUnion::single(0.2, 0.9).unwrap(), s.x.grid());
        for lvl in [0, 7, m] {
            for i in 0..32 {
                let expect = ctrl.values()[i].sqrt() * s.lambda.row(lvl)[i] / 0.25;
                assert!((s.u.row(lvl)[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump_value(0.6, 0.6, 0.8), 1.0);
        assert_eq!(bump_value(1.0, 0.6, 0.8), 0.0);
        assert!((bump_value(0.8, 0.6, 0.8) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!(bump_initial(0.8, 0.3, Grid1D::new(1.0, 8).unwrap()).is_err());
    }

    #[test]
    fn spec_round_trip_and_build() {
        let text = "length: 4.0\nhorizon: 2.5\ncontrol:\n  periodic:\n    prefix: []\n    start: 0.0\n    period: 1.0\n    pattern: [[0.0, 0.2]]\n";
        let spec: OcpSpec = serde_yaml::from_str(text).unwrap();
        let back: OcpSpec = serde_yaml::from_str(&serde_yaml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let cfg = spec.build().unwrap();
        assert_eq!(cfg.grid.cells(), 512);
        assert!(2.0 * cfg.time.dt() <= cfg.grid.h() * (1.0 + 1e-12));
    }
}
