//! Periodic spatial grids, time grids, interval unions and grid functions.
//!
//! A domain on the half-line is an [`IntervalUnion`]: a finite, sorted list
//! of closed intervals optionally followed by a periodic tail. Truncating it
//! to `[0, L]` and wrapping periodically gives the damping or control set
//! seen by a problem posed on a circle of length `L`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest exponent accepted when tabulating exponential weights.
pub const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid interval [{lo}, {hi}]: {reason}")]
    InvalidInterval {
        lo: f64,
        hi: f64,
        reason: &'static str,
    },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("non-finite argument: {0}")]
    NonFinite(f64),
    #[error("exponential weight overflows: rate {rate} times distance {distance} exceeds {MAX_WEIGHT_EXPONENT}")]
    WeightOverflow { rate: f64, distance: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("domain text: {0}")]
    Parse(String),
}

/// Uniform periodic grid on `[0, L)` with nodes `i * h`, `h = L / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid1D {
    length: f64,
    cells: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    length: f64,
    cells: usize,
}

impl TryFrom<GridRepr> for Grid1D {
    type Error = GeometryError;
    fn try_from(r: GridRepr) -> Result<Self, Self::Error> {
        Grid1D::new(r.length, r.cells)
    }
}

impl From<Grid1D> for GridRepr {
    fn from(g: Grid1D) -> Self {
        GridRepr {
            length: g.length,
            cells: g.cells,
        }
    }
}

impl Grid1D {
    pub fn new(length: f64, cells: usize) -> Result<Self, GeometryError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(GeometryError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if cells < 4 {
            return Err(GeometryError::InvalidGrid(format!(
                "at least 4 cells required, got {cells}"
            )));
        }
        Ok(Self { length, cells })
    }

    /// Grid with `ceil(length * per_unit)` cells (at least 4).
    pub fn with_resolution(length: f64, per_unit: usize) -> Result<Self, GeometryError> {
        let cells = (length * per_unit as f64 - 1e-9).ceil().max(4.0) as usize;
        Self::new(length, cells)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.node(i)).collect()
    }
}

/// Uniform time grid `t_m = m * dt`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeRepr", into = "TimeRepr")]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
struct TimeRepr {
    horizon: f64,
    steps: usize,
}

impl TryFrom<TimeRepr> for TimeGrid {
    type Error = GeometryError;
    fn try_from(r: TimeRepr) -> Result<Self, Self::Error> {
        TimeGrid::new(r.horizon, r.steps)
    }
}

impl From<TimeGrid> for TimeRepr {
    fn from(g: TimeGrid) -> Self {
        TimeRepr {
            horizon: g.horizon,
            steps: g.steps,
        }
    }
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, GeometryError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(GeometryError::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(GeometryError::InvalidGrid("at least one time step required".into()));
        }
        Ok(Self { horizon, steps })
    }

    /// Smallest step count with `dt <= max_dt`.
    pub fn with_max_step(horizon: f64, max_dt: f64) -> Result<Self, GeometryError> {
        if !(max_dt.is_finite() && max_dt > 0.0) {
            return Err(GeometryError::InvalidGrid(format!("bad step bound {max_dt}")));
        }
        let steps = (horizon / max_dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(horizon, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.horizon
        } else {
            m as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.time(m)).collect()
    }

    /// Trapezoid weights over the levels.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.levels()];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = GeometryError;
    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(GeometryError::InvalidInterval {
                lo,
                hi,
                reason: "endpoints must be finite",
            });
        }
        if hi <= lo {
            return Err(GeometryError::InvalidInterval {
                lo,
                hi,
                reason: "zero or negative length",
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Length of the overlap with `[a, b]`.
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        (self.hi.min(b) - self.lo.max(a)).max(0.0)
    }

    fn shifted(&self, s: f64) -> Interval {
        Interval {
            lo: self.lo + s,
            hi: self.hi + s,
        }
    }
}

/// Periodic continuation: `pattern` (inside `[0, period]`) repeated at
/// `start + j * period` for `j = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicTail {
    start: f64,
    period: f64,
    pattern: Vec<Interval>,
}

impl PeriodicTail {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn pattern(&self) -> &[Interval] {
        &self.pattern
    }

    /// Measure of one period of the pattern.
    pub fn pattern_measure(&self) -> f64 {
        self.pattern.iter().map(Interval::length).sum()
    }

    /// Measure of the pattern inside `[0, y]`, `0 <= y <= period`.
    fn partial(&self, y: f64) -> f64 {
        self.pattern.iter().map(|iv| iv.overlap(0.0, y)).sum()
    }

    fn cumulative(&self, x: f64) -> f64 {
        if x <= self.start {
            return 0.0;
        }
        let rel = x - self.start;
        let r = (rel / self.period).floor();
        let y = (rel - r * self.period).clamp(0.0, self.period);
        r * self.pattern_measure() + self.partial(y)
    }
}

/// Sorted union of disjoint closed intervals in `[0, inf)`, finite or with a
/// periodic tail. Adjacent intervals may touch.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    prefix: Vec<Interval>,
    tail: Option<PeriodicTail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum UnionRepr {
    Finite(Vec<Interval>),
    Periodic {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        prefix: Vec<Interval>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<f64>,
        period: f64,
        pattern: Vec<Interval>,
    },
}

impl Serialize for IntervalUnion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_yaml::with::singleton_map::serialize(&UnionRepr::from(self.clone()), s)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr: UnionRepr = serde_yaml::with::singleton_map::deserialize(d)?;
        IntervalUnion::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<UnionRepr> for IntervalUnion {
    type Error = GeometryError;
    fn try_from(r: UnionRepr) -> Result<Self, Self::Error> {
        match r {
            UnionRepr::Finite(v) => IntervalUnion::finite(v),
            UnionRepr::Periodic {
                prefix,
                start,
                period,
                pattern,
            } => {
                let start = start.unwrap_or_else(|| prefix.last().map_or(0.0, |iv| iv.hi));
                IntervalUnion::periodic(prefix, start, period, pattern)
            }
        }
    }
}

impl From<IntervalUnion> for UnionRepr {
    fn from(u: IntervalUnion) -> Self {
        match u.tail {
            None => UnionRepr::Finite(u.prefix),
            Some(t) => UnionRepr::Periodic {
                prefix: u.prefix,
                start: Some(t.start),
                period: t.period,
                pattern: t.pattern,
            },
        }
    }
}

fn check_sorted(list: &[Interval], what: &str) -> Result<(), GeometryError> {
    for w in list.windows(2) {
        if w[1].lo < w[0].hi {
            return Err(GeometryError::InvalidDomain(format!(
                "{what} intervals must be sorted and disjoint: [{}, {}] then [{}, {}]",
                w[0].lo, w[0].hi, w[1].lo, w[1].hi
            )));
        }
    }
    Ok(())
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self {
            prefix: Vec::new(),
            tail: None,
        }
    }

    pub fn finite(intervals: Vec<Interval>) -> Result<Self, GeometryError> {
        if let Some(first) = intervals.first() {
            if first.lo < 0.0 {
                return Err(GeometryError::InvalidDomain(format!(
                    "intervals must lie in [0, inf), first starts at {}",
                    first.lo
                )));
            }
        }
        check_sorted(&intervals, "domain")?;
        Ok(Self {
            prefix: intervals,
            tail: None,
        })
    }

    /// Single interval `[lo, hi]`.
    pub fn single(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        Self::finite(vec![Interval::new(lo, hi)?])
    }

    pub fn periodic(
        prefix: Vec<Interval>,
        start: f64,
        period: f64,
        pattern: Vec<Interval>,
    ) -> Result<Self, GeometryError> {
        let head = Self::finite(prefix)?;
        if !(period.is_finite() && period > 0.0) {
            return Err(GeometryError::InvalidDomain(format!(
                "period must be positive, got {period}"
            )));
        }
        if pattern.is_empty() {
            return Err(GeometryError::InvalidDomain("empty periodic pattern".into()));
        }
        if !start.is_finite() || start < head.prefix.last().map_or(0.0, |iv| iv.hi) {
            return Err(GeometryError::InvalidDomain(format!(
                "tail start {start} precedes the end of the prefix"
            )));
        }
        if pattern[0].lo < 0.0 || pattern[pattern.len() - 1].hi > period {
            return Err(GeometryError::InvalidDomain(format!(
                "pattern must lie in [0, {period}]"
            )));
        }
        check_sorted(&pattern, "pattern")?;
        Ok(Self {
            prefix: head.prefix,
            tail: Some(PeriodicTail {
                start,
                period,
                pattern,
            }),
        })
    }

    /// `[a + j L0, b + j L0]` for all `j >= 0`.
    pub fn equidistant(a: f64, b: f64, period: f64) -> Result<Self, GeometryError> {
        if !(0.0 <= a && a < b && b <= period) {
            return Err(GeometryError::InvalidDomain(format!(
                "equidistant pattern needs 0 <= a < b <= L0, got a={a}, b={b}, L0={period}"
            )));
        }
        Self::periodic(Vec::new(), 0.0, period, vec![Interval::new(a, b)?])
    }

    /// The whole half-line, written as touching unit intervals.
    pub fn half_line() -> Self {
        Self::equidistant(0.0, 1.0, 1.0).expect("unit pattern is valid")
    }

    /// Parses the YAML-style text form, e.g. `finite: [[0, 0.2]]` or
    /// `periodic: {prefix: [], period: 1, pattern: [[0, 0.2]]}`.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        serde_yaml::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        serde_yaml::to_string(self).expect("interval unions serialize")
    }

    pub fn prefix(&self) -> &[Interval] {
        &self.prefix
    }

    pub fn tail(&self) -> Option<&PeriodicTail> {
        self.tail.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.tail.is_none()
    }

    /// Intervals in increasing order (infinite for periodic tails).
    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        let tail = self.tail.iter().flat_map(|t| {
            (0u64..).flat_map(move |r| {
                let s = t.start + r as f64 * t.period;
                t.pattern.iter().map(move |iv| iv.shifted(s))
            })
        });
        self.prefix.iter().copied().chain(tail)
    }

    pub fn first_start(&self) -> Option<f64> {
        self.intervals().next().map(|iv| iv.lo)
    }

    pub fn total_measure(&self) -> f64 {
        if self.tail.is_some() {
            f64::INFINITY
        } else {
            self.prefix.iter().map(Interval::length).sum()
        }
    }

    /// Measure of the union inside `[0, x]`.
    pub fn cumulative_measure(&self, x: f64) -> f64 {
        let head: f64 = self.prefix.iter().map(|iv| iv.overlap(0.0, x)).sum();
        head + self.tail.as_ref().map_or(0.0, |t| t.cumulative(x))
    }

    pub fn contains(&self, x: f64) -> bool {
        for iv in self.intervals() {
            if iv.lo > x {
                return false;
            }
            if x <= iv.hi {
                return true;
            }
        }
        false
    }
}

/// `P(f)(w) = f(w mod L)` with the remainder taken in `[0, L)`.
pub fn periodize_eval(f: impl Fn(f64) -> f64, w: f64, length: f64) -> Result<f64, GeometryError> {
    if !w.is_finite() {
        return Err(GeometryError::NonFinite(w));
    }
    Ok(f(wrap(w, length)))
}

/// Representative of `w` in `[0, L)`.
pub fn wrap(w: f64, length: f64) -> f64 {
    let r = w.rem_euclid(length);
    if r >= length {
        0.0
    } else {
        r
    }
}

/// `dom ∩ [0, L]` as a finite union; pieces clipped to zero length are dropped.
pub fn restrict_domain(dom: &IntervalUnion, length: f64) -> IntervalUnion {
    let mut out = Vec::new();
    for iv in dom.intervals() {
        if iv.lo >= length {
            break;
        }
        let hi = iv.hi.min(length);
        if hi > iv.lo {
            out.push(Interval { lo: iv.lo, hi });
        }
    }
    IntervalUnion {
        prefix: out,
        tail: None,
    }
}

/// `|dom ∩ I|`, in closed form for periodic tails.
pub fn measure_intersection(dom: &IntervalUnion, probe: Interval) -> f64 {
    let lo = probe.lo.max(0.0);
    if probe.hi <= lo {
        return 0.0;
    }
    dom.cumulative_measure(probe.hi) - dom.cumulative_measure(lo)
}

/// Piecewise-constant density on `[0, L)`, extended periodically.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDensity {
    length: f64,
    pieces: Vec<(Interval, f64)>,
    period_integral: f64,
}

impl PeriodicDensity {
    /// Pieces must be sorted, disjoint and inside `[0, L]`.
    pub fn new(length: f64, pieces: Vec<(Interval, f64)>) -> Result<Self, GeometryError> {
        let ivs: Vec<Interval> = pieces.iter().map(|p| p.0).collect();
        check_sorted(&ivs, "density")?;
        if let (Some(f), Some(l)) = (ivs.first(), ivs.last()) {
            if f.lo < 0.0 || l.hi > length {
                return Err(GeometryError::InvalidDomain(format!(
                    "density pieces must lie in [0, {length}]"
                )));
            }
        }
        let period_integral = pieces.iter().map(|(iv, v)| iv.length() * v).sum();
        Ok(Self {
            length,
            pieces,
            period_integral,
        })
    }

    /// Value `gain` on `dom ∩ [0, L]`, zero elsewhere.
    pub fn from_domain(dom: &IntervalUnion, length: f64, gain: f64) -> Self {
        let pieces = restrict_domain(dom, length)
            .prefix
            .into_iter()
            .map(|iv| (iv, gain))
            .collect();
        Self::new(length, pieces).expect("restricted domain is sorted")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn pieces(&self) -> &[(Interval, f64)] {
        &self.pieces
    }

    pub fn sup(&self) -> f64 {
        self.pieces.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn value(&self, w: f64) -> f64 {
        let y = wrap(w, self.length);
        self.pieces
            .iter()
            .find(|(iv, _)| iv.lo <= y && y < iv.hi)
            .map_or(0.0, |p| p.1)
    }

    /// `∫_0^x` of the periodic extension, any real `x`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let r = (x / self.length).floor();
        let y = (x - r * self.length).clamp(0.0, self.length);
        let partial: f64 = self.pieces.iter().map(|(iv, v)| iv.overlap(0.0, y) * v).sum();
        r * self.period_integral + partial
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// Interior breakpoints in `[0, L)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|(iv, _)| [iv.lo, iv.hi])
            .filter(|&x| x > 0.0 && x < self.length)
            .collect();
        v.dedup();
        v
    }
}

/// Node values on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.cells() {
            return Err(GeometryError::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.cells()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.cells()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `sqrt(h Σ v_i²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `h Σ u_i v_i`.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.grid.h()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Periodic piecewise-linear interpolant at `y`.
    pub fn eval_linear(&self, y: f64) -> f64 {
        let n = self.grid.cells();
        let u = y / self.grid.h();
        let j = u.floor();
        let theta = u - j;
        let i0 = (j as i64).rem_euclid(n as i64) as usize;
        let i1 = (i0 + 1) % n;
        if theta == 0.0 {
            self.values[i0]
        } else {
            (1.0 - theta) * self.values[i0] + theta * self.values[i1]
        }
    }

    /// Values at `w_i - s`; whole-cell shifts are exact permutations.
    pub fn shifted(&self, s: f64) -> GridFunction {
        let n = self.grid.cells();
        let cells = s / self.grid.h();
        let k = cells.round();
        let values = if (cells - k).abs() <= 1e-9 * cells.abs().max(1.0) {
            let k = (k as i64).rem_euclid(n as i64) as usize;
            (0..n).map(|i| self.values[(i + n - k) % n]).collect()
        } else {
            (0..n).map(|i| self.eval_linear(self.grid.node(i) - s)).collect()
        };
        GridFunction {
            grid: self.grid,
            values,
        }
    }
}

/// Cell-averaged indicator: value at node `i` is `|P(dom ∩ [0, L]) ∩ [w_i - h/2, w_i + h/2]| / h`.
pub fn indicator_on_grid(dom: &IntervalUnion, grid: Grid1D) -> GridFunction {
    let density = PeriodicDensity::from_domain(dom, grid.length(), 1.0);
    let h = grid.h();
    GridFunction::from_fn(grid, |w| density.integral(w - 0.5 * h, w + 0.5 * h) / h)
}

/// `w(x) = exp(rate |center - x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpWeight {
    pub center: f64,
    pub rate: f64,
}

impl ExpWeight {
    pub fn new(center: f64, rate: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite(center));
        }
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(GeometryError::InvalidDomain(format!(
                "weight rate must be finite and non-negative, got {rate}"
            )));
        }
        Ok(Self { center, rate })
    }

    pub fn unit() -> Self {
        Self {
            center: 0.0,
            rate: 0.0,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.rate * (self.center - x).abs()).exp()
    }
}

pub fn exp_weight_on_grid(weight: &ExpWeight, grid: Grid1D) -> Result<GridFunction, GeometryError> {
    let distance = grid
        .nodes()
        .iter()
        .map(|w| (weight.center - w).abs())
        .fold(0.0, f64::max);
    if weight.rate * distance > MAX_WEIGHT_EXPONENT {
        return Err(GeometryError::WeightOverflow {
            rate: weight.rate,
            distance,
        });
    }
    Ok(GridFunction::from_fn(grid, |x| weight.value(x)))
}

/// Values on a space-time grid, one row per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid1D,
    time: TimeGrid,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid1D, time: TimeGrid) -> Self {
        Self {
            grid,
            time,
            data: vec![0.0; grid.cells() * time.levels()],
        }
    }

    pub fn from_rows(grid: Grid1D, time: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if rows.len() != time.levels() || rows.iter().any(|r| r.len() != grid.cells()) {
            return Err(GeometryError::GridMismatch(format!(
                "expected {} rows of {} values",
                time.levels(),
                grid.cells()
            )));
        }
        Ok(Self {
            grid,
            time,
            data: rows.concat(),
        })
    }

    /// Every level equal to `f(t_m, w_i)`.
    pub fn from_fn(grid: Grid1D, time: TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, time);
        for m in 0..time.levels() {
            let t = time.time(m);
            for (i, v) in out.row_mut(m).iter_mut().enumerate() {
                *v = f(t, grid.node(i));
            }
        }
        out
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.grid.cells();
        &self.data[m * n..(m + 1) * n]
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [f64] {
        let n = self.grid.cells();
        &mut self.data[m * n..(m + 1) * n]
    }

    pub fn level(&self, m: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.row(m).to_vec(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Entrywise difference `self - other` on the same grids.
    pub fn difference(&self, other: &SpaceTimeField) -> Result<SpaceTimeField, GeometryError> {
        if self.grid != other.grid || self.time != other.time {
            return Err(GeometryError::GridMismatch("fields live on different grids".into()));
        }
        Ok(SpaceTimeField {
            grid: self.grid,
            time: self.time,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }
}
