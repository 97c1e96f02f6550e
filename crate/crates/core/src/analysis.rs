//! Weighted space-time norms, decay-rate fits and localization checks.
//!
//! Space norms use the node sums `h Σ w_i² v_i²`; time integrals use the
//! trapezoid weights of the time grid. With the same weights in the pairing
//! `Σ_m τ_m ⟨v_m, w_m⟩` the discrete Hölder bounds hold exactly, so
//! `|⟨v, w⟩| ≤ ||v||_{2∧∞} ||w||_{1∨2}` up to rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{exp_weight_on_grid, ExpWeight, GeometryError, GridFunction, SpaceTimeField, TimeGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {found} samples above the floor, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `L²(0,T; L²)`.
    pub l2l2: f64,
    /// `max_t ||·||_{L²}`.
    pub cl2: f64,
    /// `L¹(0,T; L²)`.
    pub l1l2: f64,
    pub two_and_inf: f64,
    pub one_or_two: f64,
}

/// Which entry of a [`NormReport`] a certificate looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    L2L2,
    Cl2,
    TwoAndInf,
    OneOrTwo,
}

impl NormReport {
    pub fn get(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2L2 => self.l2l2,
            NormKind::Cl2 => self.cl2,
            NormKind::TwoAndInf => self.two_and_inf,
            NormKind::OneOrTwo => self.one_or_two,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub center: f64,
    /// RMS misfit of the log data.
    pub residual: f64,
    /// First and last node index used, inclusive.
    pub window: (usize, usize),
    pub points: usize,
}

impl DecayFit {
    pub fn eval(&self, w: f64) -> f64 {
        self.amplitude * (-self.rate * (self.center - w).abs()).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCertificate {
    pub bounded: bool,
    pub norm: NormKind,
    /// Largest norm over the family.
    pub sup: f64,
    /// Slope of `ln ||·||` against `log2 L`.
    pub trend: f64,
    /// Ratio of largest to smallest norm.
    pub spread: f64,
    pub rate: f64,
    /// Domain lengths actually tested.
    pub lengths: Vec<f64>,
}

/// Growth per doubling of `L` below which a family counts as bounded.
pub const GROWTH_PER_DOUBLING: f64 = 1.1;

fn check_shape(field: &SpaceTimeField, time: TimeGrid) -> Result<(), AnalysisError> {
    if field.time() != time {
        return Err(AnalysisError::InvalidArgument("field and time grid disagree".into()));
    }
    Ok(())
}

/// `||w v(t_m)||_{L²}` per time level.
pub fn space_norms(field: &SpaceTimeField, weight: &ExpWeight) -> Result<Vec<f64>, AnalysisError> {
    let grid = field.grid();
    let w = exp_weight_on_grid(weight, grid)?;
    let h = grid.h();
    Ok((0..field.time().levels())
        .map(|m| {
            let s: f64 = field.row(m).iter().zip(w.values()).map(|(v, wi)| (wi * v).powi(2)).sum();
            (h * s).sqrt()
        })
        .collect())
}

pub fn weighted_spacetime_norms(field: &SpaceTimeField, weight: &ExpWeight, time: TimeGrid) -> Result<NormReport, AnalysisError> {
    check_shape(field, time)?;
    let s = space_norms(field, weight)?;
    let tw = time.trapezoid_weights();
    let l2l2 = s.iter().zip(&tw).map(|(v, t)| t * v * v).sum::<f64>().sqrt();
    let l1l2 = s.iter().zip(&tw).map(|(v, t)| t * v).sum::<f64>();
    let cl2 = s.iter().copied().fold(0.0, f64::max);
    Ok(NormReport {
        l2l2,
        cl2,
        l1l2,
        two_and_inf: l2l2.max(cl2),
        one_or_two: l1l2.min(l2l2),
    })
}

/// `Σ_m τ_m h Σ_i v_i w_i` with trapezoid weights `τ_m`.
pub fn spacetime_pairing(v: &SpaceTimeField, w: &SpaceTimeField, time: TimeGrid) -> Result<f64, AnalysisError> {
    check_shape(v, time)?;
    check_shape(w, time)?;
    if v.grid() != w.grid() {
        return Err(AnalysisError::InvalidArgument("fields live on different grids".into()));
    }
    let h = v.grid().h();
    Ok(time
        .trapezoid_weights()
        .iter()
        .enumerate()
        .map(|(m, t)| t * h * v.row(m).iter().zip(w.row(m)).map(|(a, b)| a * b).sum::<f64>())
        .sum())
}

/// Per-node `L²(0,T)` norm with trapezoid weights.
pub fn time_sliced_l2(field: &SpaceTimeField, time: TimeGrid) -> Result<GridFunction, AnalysisError> {
    check_shape(field, time)?;
    let n = field.grid().cells();
    let mut acc = vec![0.0; n];
    for (m, t) in time.trapezoid_weights().iter().enumerate() {
        for (a, v) in acc.iter_mut().zip(field.row(m)) {
            *a += t * v * v;
        }
    }
    Ok(GridFunction::new(field.grid(), acc.into_iter().map(f64::sqrt).collect())?)
}

/// Least-squares line through `(|P - ω_i|, ln y_i)` over the nodes with
/// `y_i > floor`.
pub fn fit_decay_rate(profile: &GridFunction, center: f64, floor: f64) -> Result<DecayFit, AnalysisError> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!("floor must be positive, got {floor}")));
    }
    if profile.values().iter().any(|v| !(*v >= 0.0)) {
        return Err(AnalysisError::InvalidArgument("profile must be nonnegative".into()));
    }
    let grid = profile.grid();
    let pts: Vec<(usize, f64, f64)> = profile
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > floor)
        .map(|(i, v)| (i, (center - grid.node(i)).abs(), v.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(AnalysisError::InsufficientData { found: pts.len(), needed: 4 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.2 - intercept - slope * p.1).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        amplitude: intercept.exp(),
        rate: -slope,
        center,
        residual,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

/// Checks whether the norms of a family of runs stay bounded as the domain
/// grows. `reports` pairs each length `L` with its norms; the verdict looks
/// at the growth of the selected norm per doubling of `L`.
pub fn localization_certificate(
    reports: &[(f64, NormReport)],
    rate: f64,
    norm: NormKind,
) -> Result<LocalizationCertificate, AnalysisError> {
    if reports.len() < 3 {
        return Err(AnalysisError::InvalidArgument(format!("need at least 3 domain sizes, got {}", reports.len())));
    }
    if reports.iter().any(|(l, r)| !(*l > 0.0) || !(r.get(norm) > 0.0)) {
        return Err(AnalysisError::InvalidArgument("lengths and norms must be positive".into()));
    }
    let xs: Vec<f64> = reports.iter().map(|(l, _)| l.log2()).collect();
    let ys: Vec<f64> = reports.iter().map(|(_, r)| r.get(norm).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let trend = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let norms = reports.iter().map(|(_, r)| r.get(norm));
    let sup = norms.clone().fold(0.0, f64::max);
    let inf = norms.fold(f64::INFINITY, f64::min);
    Ok(LocalizationCertificate {
        bounded: trend < GROWTH_PER_DOUBLING.ln(),
        norm,
        sup,
        trend,
        spread: sup / inf,
        rate,
        lengths: reports.iter().map(|(l, _)| *l).collect(),
    })
}
