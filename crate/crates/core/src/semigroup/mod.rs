//! Closed-form solution operators for damped transport, the continuity
//! equation and the damped wave equation on a periodic grid.
//!
//! All transport operators evaluate the exact characteristic formula at the
//! grid nodes. The initial datum is read off its periodic piecewise-linear
//! interpolant, so shifts by a whole number of cells are exact.

mod wave;

pub use wave::{wave_dalembert, wave_damped, WaveState};

use rand::Rng;
use thiserror::Error;

use crate::characteristics::{Density, FlowError, FlowMap, VelocityField};
use crate::geometry::{restrict_domain, GeometryError, Grid1D, GridFunction, Interval, IntervalUnion, PeriodicDensity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Feedback gains `k_j >= 0` on the intervals of `dom ∩ [0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackProfile {
    density: PeriodicDensity,
}

impl FeedbackProfile {
    /// No feedback.
    pub fn none(length: f64) -> Self {
        Self {
            density: PeriodicDensity::new(length, Vec::new()).expect("empty density"),
        }
    }

    /// The same gain on every interval.
    pub fn uniform(dom: &IntervalUnion, gain: f64, length: f64) -> Result<Self, SemigroupError> {
        check_gain(gain)?;
        Ok(Self {
            density: PeriodicDensity::from_domain(dom, length, gain),
        })
    }

    /// One gain per interval of `dom ∩ [0, L]`, in order.
    pub fn with_gains(dom: &IntervalUnion, gains: &[f64], length: f64) -> Result<Self, SemigroupError> {
        let pieces = restrict_domain(dom, length).prefix().to_vec();
        if pieces.len() != gains.len() {
            return Err(SemigroupError::InvalidArgument(format!(
                "{} gains for {} intervals",
                gains.len(),
                pieces.len()
            )));
        }
        for &g in gains {
            check_gain(g)?;
        }
        Ok(Self {
            density: PeriodicDensity::new(length, pieces.into_iter().zip(gains.iter().copied()).collect())?,
        })
    }

    pub fn from_density(density: PeriodicDensity) -> Result<Self, SemigroupError> {
        for (_, g) in density.pieces() {
            check_gain(*g)?;
        }
        Ok(Self { density })
    }

    pub fn density(&self) -> &PeriodicDensity {
        &self.density
    }

    pub fn length(&self) -> f64 {
        self.density.length()
    }

    /// `k̂ = sup k_j`.
    pub fn sup_gain(&self) -> f64 {
        self.density.sup()
    }
}

fn check_gain(g: f64) -> Result<(), SemigroupError> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(SemigroupError::InvalidArgument(format!("gain must be non-negative, got {g}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), SemigroupError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SemigroupError::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

fn check_speed(c: f64) -> Result<(), SemigroupError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(SemigroupError::InvalidArgument(format!("velocity must be positive, got {c}")));
    }
    Ok(())
}

fn check_profile(fb: &FeedbackProfile, grid: Grid1D) -> Result<(), SemigroupError> {
    if (fb.length() - grid.length()).abs() > 1e-12 * grid.length() {
        return Err(SemigroupError::InvalidArgument(format!(
            "feedback period {} differs from grid length {}",
            fb.length(),
            grid.length()
        )));
    }
    Ok(())
}

/// `x(w, t) = P(x0)(w - ct)`.
pub fn transport_free(x0: &GridFunction, t: f64, c: f64) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    check_speed(c)?;
    Ok(x0.shifted(c * t))
}

/// `x(w, t) = exp(-(1/c) ∫_{w-ct}^{w} P(k χ)) P(x0)(w - ct)`.
pub fn transport_damped(
    x0: &GridFunction,
    t: f64,
    c: f64,
    fb: &FeedbackProfile,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    check_speed(c)?;
    check_profile(fb, x0.grid())?;
    let mut out = x0.shifted(c * t);
    let grid = out.grid();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let w = grid.node(i);
        *v *= (-fb.density().integral(w - c * t, w) / c).exp();
    }
    Ok(out)
}

/// Variable-velocity transport `x_t + c x_w = -χ k x` along characteristics.
pub fn transport_variable(
    x0: &GridFunction,
    t: f64,
    velocity: &VelocityField,
    fb: Option<&FeedbackProfile>,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    let grid = x0.grid();
    if let Some(fb) = fb {
        check_profile(fb, grid)?;
    }
    let map = FlowMap::new(velocity, grid.length())?;
    let mut values = Vec::with_capacity(grid.cells());
    for i in 0..grid.cells() {
        let w = grid.node(i);
        let q = map.backward(w, t)?.position;
        let decay = match fb {
            Some(fb) if fb.sup_gain() > 0.0 => map.path_integral(&Density::PiecewiseConstant(fb.density()), q, w)?,
            _ => 0.0,
        };
        values.push((-decay).exp() * x0.eval_linear(q));
    }
    Ok(GridFunction::new(grid, values)?)
}

/// Continuity equation `x_t = (c x)_w - χ k x` with flux-periodic boundary
/// condition `c(0) x(0) = c(L) x(L)`.
///
/// Along the forward characteristic `p(t, w)` the solution is
/// `(c(0)/c(L))^{N_L} exp(∫_w^p P(c' - χk)/P(c)) P(x0)(p)`, `N_L = ⌊p / L⌋`.
/// The `c'/c` part integrates period by period to `ln c`, and the jumps of
/// `ln P(c)` at multiples of `L` cancel against the power, leaving
/// `c(P(p)) / c(w)`.
pub fn continuity_damped(
    x0: &GridFunction,
    t: f64,
    velocity: &VelocityField,
    fb: Option<&FeedbackProfile>,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    let grid = x0.grid();
    let l = grid.length();
    if let Some(fb) = fb {
        check_profile(fb, grid)?;
    }
    let map = FlowMap::new(velocity, l)?;
    let mut values = Vec::with_capacity(grid.cells());
    for i in 0..grid.cells() {
        let w = grid.node(i);
        let p = map.forward(w, t)?.position;
        let damping = match fb {
            Some(fb) if fb.sup_gain() > 0.0 => map.path_integral(&Density::PiecewiseConstant(fb.density()), w, p)?,
            _ => 0.0,
        };
        let ratio = velocity.periodic(p, l) / velocity.value(w);
        values.push(ratio * (-damping).exp() * x0.eval_linear(p));
    }
    Ok(GridFunction::new(grid, values)?)
}

/// Box data on the gaps of the control set, placed so that the part of the
/// box still upstream of the next control interval at time `t` is maximal.
pub fn adversarial_probes(grid: Grid1D, control: &IntervalUnion, c: f64, t: f64) -> Vec<GridFunction> {
    let l = grid.length();
    let h = grid.h();
    let pieces = restrict_domain(control, l).prefix().to_vec();
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    if pieces.is_empty() {
        gaps.push((0.0, l));
    } else {
        for w in pieces.windows(2) {
            gaps.push((w[0].hi(), w[1].lo()));
        }
        gaps.push((pieces[pieces.len() - 1].hi(), pieces[0].lo() + l));
    }
    let mut probes = Vec::new();
    for (start, end) in gaps {
        if end - start < 2.0 * h {
            continue;
        }
        let stop = (end - c * t).max(start + 2.0 * h);
        let support = match Interval::new(start, stop) {
            Ok(iv) => iv,
            Err(_) => continue,
        };
        let data = GridFunction::from_fn(grid, |w| {
            let inside = |x: f64| x >= support.lo() && x <= support.hi();
            if inside(w) || inside(w + l) {
                1.0
            } else {
                0.0
            }
        });
        if data.l2_norm() > 0.0 {
            probes.push(data);
        }
    }
    probes
}

/// Lower estimate of `||T||` as the largest ratio `||T x0|| / ||x0||` over
/// `samples` random data and the given extra probes.
pub fn estimate_operator_norm<R: Rng + ?Sized>(
    propagator: &dyn Fn(&GridFunction) -> Result<GridFunction, SemigroupError>,
    grid: Grid1D,
    samples: usize,
    rng: &mut R,
    probes: &[GridFunction],
) -> Result<f64, SemigroupError> {
    let mut best: f64 = 0.0;
    let mut consider = |x0: &GridFunction| -> Result<(), SemigroupError> {
        let n0 = x0.l2_norm();
        if n0 > 0.0 {
            best = best.max(propagator(x0)?.l2_norm() / n0);
        }
        Ok(())
    };
    for _ in 0..samples {
        let values = (0..grid.cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        consider(&GridFunction::new(grid, values)?)?;
    }
    for p in probes {
        consider(p)?;
    }
    Ok(best)
}
