//! Characteristic curves `dq/dt = c(q)` for a periodized velocity.
//!
//! For a variable velocity the flow is obtained by inverting the travel
//! time `τ(a, b) = ∫_a^b dy / c(y)`, which is monotone in `b`. One full
//! period of length `L` always takes the same time `T_L`, so whole periods
//! are removed first and the remainder is found by a safeguarded Newton
//! iteration on `[0, L)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap, PeriodicDensity};
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-13;
const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid velocity: {0}")]
    InvalidVelocity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Velocity given by a closure on `[0, L]` together with its bounds.
#[derive(Clone)]
pub struct VariableVelocity {
    eval: ScalarFn,
    derivative: Option<ScalarFn>,
    c_min: f64,
    c_max: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for VariableVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariableVelocity")
            .field("c_min", &self.c_min)
            .field("c_max", &self.c_max)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum VelocityField {
    Constant(f64),
    Variable(VariableVelocity),
}

impl VelocityField {
    pub fn constant(c: f64) -> Result<Self, FlowError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(FlowError::InvalidVelocity(format!("constant velocity must be positive, got {c}")));
        }
        Ok(Self::Constant(c))
    }

    /// `breakpoints` are points in `[0, L)` where `c` may fail to be smooth.
    pub fn variable(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_min: f64,
        c_max: f64,
        breakpoints: Vec<f64>,
        derivative: Option<ScalarFn>,
    ) -> Result<Self, FlowError> {
        if !(c_min.is_finite() && c_max.is_finite() && c_min > 0.0 && c_min <= c_max) {
            return Err(FlowError::InvalidVelocity(format!(
                "need 0 < c_min <= c_max, got {c_min}, {c_max}"
            )));
        }
        let mut breakpoints = breakpoints;
        breakpoints.sort_by(f64::total_cmp);
        Ok(Self::Variable(VariableVelocity {
            eval: Arc::new(eval),
            derivative,
            c_min,
            c_max,
            breakpoints,
        }))
    }

    /// `c(y) = mean + amplitude sin(2π y / wavelength)`.
    pub fn sine(mean: f64, amplitude: f64, wavelength: f64) -> Result<Self, FlowError> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(FlowError::InvalidVelocity(format!("bad wavelength {wavelength}")));
        }
        let a = amplitude.abs();
        let kw = 2.0 * std::f64::consts::PI / wavelength;
        Self::variable(
            move |y| mean + amplitude * (kw * y).sin(),
            mean - a,
            mean + a,
            Vec::new(),
            Some(Arc::new(move |y| amplitude * kw * (kw * y).cos())),
        )
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    /// Value at a point of `[0, L]` (no wrapping).
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Variable(v) => (v.eval)(y),
        }
    }

    /// `P(c)(y)`.
    pub fn periodic(&self, y: f64, length: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Variable(v) => (v.eval)(wrap(y, length)),
        }
    }

    /// `c'(y)`; central differences when no derivative was supplied.
    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Variable(v) => match &v.derivative {
                Some(d) => d(y),
                None => {
                    let e = 1e-6 * (1.0 + y.abs());
                    ((v.eval)(y + e) - (v.eval)(y - e)) / (2.0 * e)
                }
            },
        }
    }

    pub fn c_min(&self) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Variable(v) => v.c_min,
        }
    }

    pub fn c_max(&self) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Variable(v) => v.c_max,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::Constant(_) => &[],
            Self::Variable(v) => &v.breakpoints,
        }
    }

    /// Samples `[0, L]` and checks the declared bounds.
    pub fn validate_on(&self, length: f64) -> Result<(), FlowError> {
        if let Self::Variable(v) = self {
            let slack = 1e-9 * v.c_max;
            for j in 0..=1024 {
                let y = length * j as f64 / 1024.0;
                let c = (v.eval)(y);
                if !(c.is_finite() && c >= v.c_min - slack && c <= v.c_max + slack) {
                    return Err(FlowError::InvalidVelocity(format!(
                        "c({y}) = {c} outside [{}, {}]",
                        v.c_min, v.c_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Serializable velocity description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VelocitySpec {
    Constant {
        value: f64,
    },
    Sine {
        mean: f64,
        amplitude: f64,
        wavelength: f64,
    },
}

impl Default for VelocitySpec {
    fn default() -> Self {
        Self::Constant { value: 2.0 }
    }
}

impl VelocitySpec {
    pub fn build(&self) -> Result<VelocityField, FlowError> {
        match *self {
            Self::Constant { value } => VelocityField::constant(value),
            Self::Sine {
                mean,
                amplitude,
                wavelength,
            } => VelocityField::sine(mean, amplitude, wavelength),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exactness {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResult {
    pub position: f64,
    /// `∫ dy / c` along the traversed path.
    pub travel_time_integral: f64,
    pub exactness: Exactness,
}

/// Right-hand side of a path integral `∫ P(f) / P(c)`.
pub enum Density<'a> {
    PiecewiseConstant(&'a PeriodicDensity),
    Function(&'a dyn Fn(f64) -> f64),
}

impl Density<'_> {
    fn value(&self, y: f64) -> f64 {
        match self {
            Density::PiecewiseConstant(d) => d.value(y),
            Density::Function(f) => f(y),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density::PiecewiseConstant(d) => d.breakpoints(),
            Density::Function(_) => Vec::new(),
        }
    }
}

/// Flow of a velocity periodized with period `L`, with the period travel time cached.
#[derive(Debug, Clone)]
pub struct FlowMap {
    velocity: VelocityField,
    length: f64,
    period_time: f64,
}

impl FlowMap {
    pub fn new(velocity: &VelocityField, length: f64) -> Result<Self, FlowError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FlowError::InvalidArgument(format!("period must be positive, got {length}")));
        }
        let mut map = Self {
            velocity: velocity.clone(),
            length,
            period_time: 0.0,
        };
        map.period_time = match velocity {
            VelocityField::Constant(c) => length / c,
            VelocityField::Variable(_) => map.integrate_over(&|u| 1.0 / map.velocity.value(u), &[], 0.0, length)?,
        };
        Ok(map)
    }

    pub fn velocity(&self) -> &VelocityField {
        &self.velocity
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `T_L = ∫_0^L dy / c`.
    pub fn period_time(&self) -> f64 {
        self.period_time
    }

    /// `∫_a^b g(y mod L) dy`, splitting at period boundaries and at the given
    /// breakpoints (in `[0, L)`) together with those of the velocity.
    fn integrate_over(&self, g: &dyn Fn(f64) -> f64, extra: &[f64], a: f64, b: f64) -> Result<f64, FlowError> {
        if a == b {
            return Ok(0.0);
        }
        if b < a {
            return self.integrate_over(g, extra, b, a).map(|v| -v);
        }
        let l = self.length;
        let mut cuts: Vec<f64> = self
            .velocity
            .breakpoints()
            .iter()
            .chain(extra)
            .copied()
            .filter(|x| *x > 0.0 && *x < l)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        let mut j = (a / l).floor();
        loop {
            let base = j * l;
            let lo = (a - base).max(0.0);
            let hi = (b - base).min(l);
            if hi > lo {
                let mut knots = vec![lo];
                knots.extend(cuts.iter().copied().filter(|x| *x > lo && *x < hi));
                knots.push(hi);
                for w in knots.windows(2) {
                    let tol = QUAD_TOL * (w[1] - w[0]).max(1e-3);
                    total += integrate(g, w[0], w[1], tol).ok_or_else(|| {
                        FlowError::Numeric(format!("quadrature failed on [{}, {}]", w[0], w[1]))
                    })?;
                }
            }
            j += 1.0;
            if j * l >= b {
                break;
            }
        }
        Ok(total)
    }

    /// `τ(a, b) = ∫_a^b dy / P(c)(y)`.
    pub fn travel_time(&self, a: f64, b: f64) -> Result<f64, FlowError> {
        match &self.velocity {
            VelocityField::Constant(c) => Ok((b - a) / c),
            VelocityField::Variable(_) => {
                let v = &self.velocity;
                self.integrate_over(&|u| 1.0 / v.value(u), &[], a, b)
            }
        }
    }

    /// Solves `τ(p0, p0 + s y) = rem` (s = ±1) for `y ∈ [0, L]`.
    fn invert(&self, p0: f64, rem: f64, sign: f64) -> Result<(f64, f64), FlowError> {
        if rem <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let l = self.length;
        let mut lo = (self.velocity.c_min() * rem).min(l);
        let mut hi = (self.velocity.c_max() * rem).min(l);
        let tau = |y: f64| -> Result<f64, FlowError> {
            let t = self.travel_time(p0.min(p0 + sign * y), p0.max(p0 + sign * y))?;
            Ok(t)
        };
        // g(y) = τ(y) - rem is increasing with g' = 1 / c(p0 + s y).
        let mut y = 0.5 * (lo + hi);
        let mut g = tau(y)? - rem;
        for _ in 0..200 {
            if g.abs() <= ROOT_TOL * rem.max(1.0) || hi - lo <= ROOT_TOL * l {
                return Ok((y, g + rem));
            }
            if g > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let slope = 1.0 / self.velocity.periodic(p0 + sign * y, l);
            let mut next = y - g / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = self.travel_time(
                (p0 + sign * y).min(p0 + sign * next),
                (p0 + sign * y).max(p0 + sign * next),
            )?;
            g += if next > y { step } else { -step };
            y = next;
        }
        Err(FlowError::Numeric(format!("travel-time inversion did not converge from {p0}")))
    }

    fn check_args(&self, x: f64, t: f64) -> Result<(), FlowError> {
        if !x.is_finite() || !(t.is_finite() && t >= 0.0) {
            return Err(FlowError::InvalidArgument(format!("position {x}, time {t}")));
        }
        Ok(())
    }

    /// `p(t, p0)`: position at time `t` of the characteristic starting at `p0`.
    pub fn forward(&self, p0: f64, t: f64) -> Result<FlowResult, FlowError> {
        self.check_args(p0, t)?;
        self.flow(p0, t, 1.0)
    }

    /// `q(t, q0)`: starting point of the characteristic that reaches `q0` at time `t`.
    pub fn backward(&self, q0: f64, t: f64) -> Result<FlowResult, FlowError> {
        self.check_args(q0, t)?;
        self.flow(q0, t, -1.0)
    }

    fn flow(&self, x0: f64, t: f64, sign: f64) -> Result<FlowResult, FlowError> {
        match &self.velocity {
            VelocityField::Constant(c) => Ok(FlowResult {
                position: x0 + sign * c * t,
                travel_time_integral: (c * t) / c,
                exactness: Exactness::Analytic,
            }),
            VelocityField::Variable(_) => {
                let periods = (t / self.period_time).floor();
                let rem = t - periods * self.period_time;
                let (y, tau) = self.invert(x0, rem, sign)?;
                Ok(FlowResult {
                    position: x0 + sign * (periods * self.length + y),
                    travel_time_integral: periods * self.period_time + tau,
                    exactness: Exactness::Numeric,
                })
            }
        }
    }

    /// `∫_from^to P(f) / P(c) dy`; exact for piecewise-constant densities and constant `c`.
    pub fn path_integral(&self, f: &Density<'_>, from: f64, to: f64) -> Result<f64, FlowError> {
        if !(from.is_finite() && to.is_finite()) {
            return Err(FlowError::InvalidArgument(format!("limits {from}, {to}")));
        }
        match (f, &self.velocity) {
            (Density::PiecewiseConstant(d), VelocityField::Constant(c)) => Ok(d.integral(from, to) / c),
            _ => {
                let v = &self.velocity;
                let integrand = |u: f64| f.value(u) / v.value(u);
                self.integrate_over(&integrand, &f.breakpoints(), from, to)
            }
        }
    }
}

pub fn flow_forward(p0: f64, t: f64, velocity: &VelocityField, length: f64) -> Result<FlowResult, FlowError> {
    FlowMap::new(velocity, length)?.forward(p0, t)
}

pub fn flow_backward(q0: f64, t: f64, velocity: &VelocityField, length: f64) -> Result<FlowResult, FlowError> {
    FlowMap::new(velocity, length)?.backward(q0, t)
}

pub fn path_integral(
    f: &Density<'_>,
    from: f64,
    to: f64,
    velocity: &VelocityField,
    length: f64,
) -> Result<f64, FlowError> {
    FlowMap::new(velocity, length)?.path_integral(f, from, to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::IntervalUnion;

    #[test]
    fn constant_flow_is_exact() {
        let v = VelocityField::constant(2.0).unwrap();
        let r = flow_forward(0.3, 1.25, &v, 1.0).unwrap();
        assert_eq!(r.position, 2.8);
        assert_eq!(r.exactness, Exactness::Analytic);
        assert!((r.travel_time_integral - 1.25).abs() < 1e-15);
        let b = flow_backward(0.3, 1.25, &v, 1.0).unwrap();
        assert_eq!(b.position, 0.3 - 2.5);
    }

    #[test]
    fn period_time_of_sine_velocity() {
        let v = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
        let map = FlowMap::new(&v, 1.0).unwrap();
        // ∫_0^1 dy / (2 + 0.5 sin 2πy) = 1 / sqrt(4 - 0.25)
        assert!((map.period_time() - 1.0 / 3.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn variable_flow_crosses_periods() {
        let v = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
        let map = FlowMap::new(&v, 1.0).unwrap();
        let t = 3.0 * map.period_time();
        let r = map.forward(0.4, t).unwrap();
        assert!((r.position - 3.4).abs() < 1e-10);
    }

    #[test]
    fn negative_time_is_rejected() {
        let v = VelocityField::constant(1.0).unwrap();
        assert!(flow_forward(0.0, -1.0, &v, 1.0).is_err());
        assert!(VelocityField::constant(0.0).is_err());
        assert!(VelocityField::variable(|_| 1.0, 2.0, 1.0, vec![], None).is_err());
    }

    #[test]
    fn path_integral_of_indicator() {
        let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap();
        let d = PeriodicDensity::from_domain(&dom, 2.0, 3.0);
        let v = VelocityField::constant(2.0).unwrap();
        let exact = path_integral(&Density::PiecewiseConstant(&d), -0.5, 2.5, &v, 2.0).unwrap();
        // [-0.5, 2.5] meets [0,0.2], [1,1.2], [2,2.2]: 0.6 length, gain 3, speed 2
        assert!((exact - 0.9).abs() < 1e-14);
        let g = |y: f64| y;
        let quad = path_integral(&Density::Function(&g), 0.0, 2.0, &v, 2.0).unwrap();
        assert!((quad - 1.0).abs() < 1e-13);
        let slow = VelocityField::sine(2.0, 0.5, 2.0).unwrap();
        let unit = PeriodicDensity::from_domain(&IntervalUnion::half_line(), 2.0, 1.0);
        let a = path_integral(&Density::PiecewiseConstant(&d), 0.0, 4.0, &slow, 2.0).unwrap();
        let b = path_integral(&Density::PiecewiseConstant(&unit), 0.0, 4.0, &slow, 2.0).unwrap();
        let tl = FlowMap::new(&slow, 2.0).unwrap().period_time();
        assert!((b - 2.0 * tl).abs() < 1e-12);
        assert!(a > 0.0 && a < 3.0 * b);
    }

    #[test]
    fn velocity_spec_round_trip() {
        let s = VelocitySpec::Sine {
            mean: 2.0,
            amplitude: 0.5,
            wavelength: 1.0,
        };
        let text = serde_yaml::to_string(&s).unwrap();
        assert_eq!(serde_yaml::from_str::<VelocitySpec>(&text).unwrap(), s);
        let v = s.build().unwrap();
        assert!(v.validate_on(1.0).is_ok());
        assert_eq!(v.c_min(), 1.5);
    }
}
