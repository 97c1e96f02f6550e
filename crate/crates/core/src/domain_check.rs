//! Stabilizability of damped transport by interval-supported feedback.
//!
//! Write the damping set as intervals `[a_j, b_j]`, `j = 1, 2, ...`, with
//! measures `B_j = b_j - a_j`. For rates `0 < k < K` the pair condition reads
//!
//! ```text
//! k (a_n - b_m) - K Σ_{j=m+1}^{n-1} B_j <= 1   for all n >= m,
//! ```
//!
//! which is equivalent to the measure condition
//! `|Ω ∩ [b_m, a_n]| >= c1 |b_m - a_n| - c0` with `k = c1 / c0`, `K = 1 / c0`.
//!
//! For a periodic tail the pair values satisfy `V(m + q, n + q) = V(m, n)`
//! (q = intervals per period) and moving `n` one period further adds the
//! per-period balance `Δ = k L0 - K |pattern|`. If `Δ > 0` the supremum is
//! infinite. Otherwise every pair is dominated by a pair with `m` in the
//! prefix or the first period and `n` at most one period after `m`, so the
//! supremum is a maximum over the prefix plus two periods.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{measure_intersection, GeometryError, Interval, IntervalUnion};

/// Periods enumerated by default when cross-checking the closed form.
pub const DEFAULT_HORIZON: usize = 64;

/// Multipliers `β` tried by [`certify_rates`], largest first.
pub const DEFAULT_BETAS: [f64; 3] = [0.75, 0.5, 0.25];

const K_EXPONENTS: std::ops::RangeInclusive<i32> = -20..=20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("domain is not stabilizable: {0}")]
    NotStabilizable(FailureReason),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureReason {
    FirstIntervalOffset,
    FiniteMeasure,
    DensityDeficit,
    PairViolation { n: usize, m: usize },
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::FirstIntervalOffset => write!(f, "first-interval-offset"),
            FailureReason::FiniteMeasure => write!(f, "finite-measure"),
            FailureReason::DensityDeficit => write!(f, "density-deficit"),
            FailureReason::PairViolation { n, m } => write!(f, "pair-violation({n},{m})"),
        }
    }
}

/// Rates for which the pair condition holds.
///
/// `pair_sup` is the largest pair value (at most 1); `overshoot = exp(max(pair_sup, 0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCertificate {
    pub k: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    pub overshoot: f64,
    pub pair_sup: f64,
    /// Number of periods covered by the explicit cross-check (0 for finite unions).
    pub verified_horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub stabilizable: bool,
    pub certificate: Option<RateCertificate>,
    pub reason: Option<FailureReason>,
}

impl Verdict {
    fn fail(reason: FailureReason) -> Self {
        Self {
            stabilizable: false,
            certificate: None,
            reason: Some(reason),
        }
    }
}

/// Supremum of the pair values with the maximizing (1-based) pair `(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSup {
    pub value: f64,
    pub n: usize,
    pub m: usize,
}

fn validate_rates(k: f64, big_k: f64) -> Result<(), DomainError> {
    if !(k.is_finite() && big_k.is_finite() && k > 0.0 && k < big_k) {
        return Err(DomainError::InvalidRates(format!(
            "need 0 < k < K, got k={k}, K={big_k}"
        )));
    }
    Ok(())
}

/// Maximum of `V(m, n)` over `n >= m` within a finite list of intervals.
fn pair_sup_of(list: &[Interval], k: f64, big_k: f64) -> PairSup {
    let mut best = PairSup {
        value: f64::NEG_INFINITY,
        n: 0,
        m: 0,
    };
    // psi(m) = k b_m - K S_m, phi(n) = k a_n - K S_{n-1}; V = phi(n) - psi(m) for n > m.
    let mut s = 0.0;
    let mut min_psi = f64::INFINITY;
    let mut argmin = 0;
    for (j, iv) in list.iter().enumerate() {
        let phi = k * iv.lo() - big_k * s;
        if j > 0 && phi - min_psi > best.value {
            best = PairSup {
                value: phi - min_psi,
                n: j + 1,
                m: argmin + 1,
            };
        }
        let diag = -k * iv.length();
        if diag > best.value {
            best = PairSup {
                value: diag,
                n: j + 1,
                m: j + 1,
            };
        }
        s += iv.length();
        let psi = k * iv.hi() - big_k * s;
        if psi < min_psi {
            min_psi = psi;
            argmin = j;
        }
    }
    best
}

/// Pair supremum by explicit enumeration of the prefix plus `periods` periods.
pub fn enumerate_pair_sup(dom: &IntervalUnion, k: f64, big_k: f64, periods: usize) -> PairSup {
    let count = dom.prefix().len() + periods * dom.tail().map_or(0, |t| t.pattern().len());
    let list: Vec<Interval> = dom.intervals().take(count).collect();
    pair_sup_of(&list, k, big_k)
}

/// Per-period balance `k L0 - K |pattern|` of the tail.
pub fn period_balance(dom: &IntervalUnion, k: f64, big_k: f64) -> Option<f64> {
    dom.tail()
        .map(|t| k * t.period() - big_k * t.pattern_measure())
}

fn starts_at_zero(dom: &IntervalUnion) -> bool {
    dom.first_start().is_some_and(|a| a.abs() <= 1e-12)
}

/// Checks the pair condition for rates `k < K`, using the closed form for
/// periodic tails and cross-checking it over `horizon` periods.
pub fn check_condition_ii_with_horizon(
    dom: &IntervalUnion,
    k: f64,
    big_k: f64,
    horizon: usize,
) -> Result<Verdict, DomainError> {
    validate_rates(k, big_k)?;
    if !starts_at_zero(dom) {
        return Ok(Verdict::fail(FailureReason::FirstIntervalOffset));
    }
    let Some(balance) = period_balance(dom, k, big_k) else {
        return Ok(Verdict::fail(FailureReason::FiniteMeasure));
    };
    if balance > 0.0 {
        return Ok(Verdict::fail(FailureReason::DensityDeficit));
    }
    let sup = enumerate_pair_sup(dom, k, big_k, 2);
    if horizon > 2 {
        let long = enumerate_pair_sup(dom, k, big_k, horizon);
        debug_assert!(
            long.value <= sup.value + 1e-12 * (1.0 + sup.value.abs()),
            "closed form {} below enumeration {}",
            sup.value,
            long.value
        );
    }
    if sup.value > 1.0 {
        return Ok(Verdict::fail(FailureReason::PairViolation { n: sup.n, m: sup.m }));
    }
    Ok(Verdict {
        stabilizable: true,
        certificate: Some(RateCertificate {
            k,
            big_k,
            overshoot: sup.value.max(0.0).exp(),
            pair_sup: sup.value,
            verified_horizon: horizon,
        }),
        reason: None,
    })
}

pub fn check_condition_ii(dom: &IntervalUnion, k: f64, big_k: f64) -> Result<Verdict, DomainError> {
    check_condition_ii_with_horizon(dom, k, big_k, DEFAULT_HORIZON)
}

/// Searches `K = 2^i` and `k = β K ρ` (ρ the tail density) for the largest
/// passing ratio `k / K`, and for that ratio the largest `K`.
pub fn certify_rates(dom: &IntervalUnion) -> Option<RateCertificate> {
    certify_rates_with(dom, &DEFAULT_BETAS)
}

pub fn certify_rates_with(dom: &IntervalUnion, betas: &[f64]) -> Option<RateCertificate> {
    let tail = dom.tail()?;
    let rho = tail.pattern_measure() / tail.period();
    let mut betas: Vec<f64> = betas.iter().copied().filter(|b| *b > 0.0).collect();
    betas.sort_by(|a, b| b.total_cmp(a));
    for beta in betas {
        for i in K_EXPONENTS.rev() {
            let big_k = 2f64.powi(i);
            let k = beta * big_k * rho;
            if !(k > 0.0 && k < big_k) {
                continue;
            }
            if let Ok(Verdict {
                certificate: Some(c),
                ..
            }) = check_condition_ii(dom, k, big_k)
            {
                return Some(c);
            }
        }
    }
    None
}

/// `|dom ∩ I| >= c1 |I| - c0` for every probe.
pub fn check_condition_iii(dom: &IntervalUnion, c1: f64, c0: f64, probes: &[Interval]) -> bool {
    probes
        .iter()
        .all(|&p| measure_intersection(dom, p) >= c1 * p.length() - c0)
}

/// Gap-to-gap probes `[b_m, a_n]`, `m < n`, over the prefix plus `horizon` periods.
pub fn default_probes(dom: &IntervalUnion, horizon: usize) -> Vec<Interval> {
    let count = dom.prefix().len() + horizon * dom.tail().map_or(0, |t| t.pattern().len());
    let list: Vec<Interval> = dom.intervals().take(count).collect();
    let mut probes = Vec::new();
    for (m, left) in list.iter().enumerate() {
        for right in &list[m + 1..] {
            if let Ok(p) = Interval::new(left.hi(), right.lo()) {
                probes.push(p);
            }
        }
    }
    probes
}

/// Measure condition on the default probes, together with the structural
/// requirements that the first interval starts at 0 and that the asymptotic
/// density is at least `c1`.
pub fn check_condition_iii_default(dom: &IntervalUnion, c1: f64, c0: f64, horizon: usize) -> bool {
    if !starts_at_zero(dom) {
        return false;
    }
    let Some(tail) = dom.tail() else {
        return false;
    };
    if c1 * tail.period() > tail.pattern_measure() {
        return false;
    }
    check_condition_iii(dom, c1, c0, &default_probes(dom, horizon.max(2)))
}

pub fn make_equidistant(a: f64, b: f64, period: f64) -> Result<IntervalUnion, DomainError> {
    Ok(IntervalUnion::equidistant(a, b, period)?)
}

/// Decay guaranteed for transport at speed `c` with feedback gain `gain` on
/// `dom`: returns `(M, rate)` with `||T(t)|| <= M exp(-rate t)`.
pub fn guaranteed_decay(dom: &IntervalUnion, gain: f64, c: f64) -> Result<(f64, f64), DomainError> {
    if !(gain.is_finite() && gain >= 0.0) {
        return Err(DomainError::InvalidRates(format!("gain must be non-negative, got {gain}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(DomainError::InvalidRates(format!("velocity must be positive, got {c}")));
    }
    if gain == 0.0 {
        return Ok((1.0, 0.0));
    }
    if !starts_at_zero(dom) {
        return Err(DomainError::NotStabilizable(FailureReason::FirstIntervalOffset));
    }
    let Some(tail) = dom.tail() else {
        return Err(DomainError::NotStabilizable(FailureReason::FiniteMeasure));
    };
    if dom.prefix().is_empty() && tail.start() == 0.0 && tail.pattern().len() == 1 {
        let width = tail.pattern()[0].length();
        if (width - tail.period()).abs() <= 1e-12 * tail.period() {
            return Ok((1.0, gain));
        }
        return Ok(((gain * width / c).exp(), gain * width / tail.period()));
    }
    let cert = certify_rates(dom).ok_or(DomainError::NotStabilizable(FailureReason::DensityDeficit))?;
    let scale = gain / cert.big_k;
    Ok(((scale * cert.pair_sup.max(0.0) / c).exp(), scale * cert.k))
}
