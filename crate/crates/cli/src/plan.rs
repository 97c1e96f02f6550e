//! Configuration files for experiments, simulations and domain checks.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hyploc_core::characteristics::VelocitySpec;
use hyploc_core::geometry::IntervalUnion;
use hyploc_core::ocp::{InitialSpec, OcpSpec, SolverKind};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpaceTimeField,
    SlicedNorms,
    DomainSweep,
    AlphaSweep,
    StabilizabilityDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::SpaceTimeField,
        Self::SlicedNorms,
        Self::DomainSweep,
        Self::AlphaSweep,
        Self::StabilizabilityDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SpaceTimeField => "space-time-field",
            Self::SlicedNorms => "sliced-norms",
            Self::DomainSweep => "domain-sweep",
            Self::AlphaSweep => "alpha-sweep",
            Self::StabilizabilityDemo => "stabilizability-demo",
        }
    }
}

fn yes() -> bool {
    true
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_floor() -> f64 {
    1e-8
}
fn default_gain() -> f64 {
    5.0
}
fn default_frames() -> usize {
    12
}
fn default_samples() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub experiment: ExperimentKind,
    pub base: OcpSpec,
    /// Domain lengths for the sweeps and the stabilizability demo.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "yes")]
    pub plot: bool,
    /// Write every solved state so analysis can be rerun without solving.
    #[serde(default = "yes")]
    pub save_fields: bool,
    /// Load previously written states instead of solving when present.
    #[serde(default)]
    pub resume: bool,
    #[serde(default)]
    pub seed: u64,
    /// Profiles below this value are ignored by the decay fit.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Center of the exponential weights; defaults to the bump center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// Feedback gain of the stabilizability demo.
    #[serde(default = "default_gain")]
    pub gain: f64,
    /// Number of sampled times in the stabilizability demo.
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Random data per norm estimate in the stabilizability demo.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl ExperimentPlan {
    /// The defaults of the numerical study: `c = 2`, bump at 0.6 of width
    /// 0.8, `α = 0.125`, equidistant control `[j, j + 0.2]`.
    pub fn stock(kind: ExperimentKind) -> Self {
        let equidistant = IntervalUnion::equidistant(0.0, 0.2, 1.0).expect("valid layout");
        let (length, horizon) = match kind {
            ExperimentKind::DomainSweep => (2.0, 5.0),
            _ => (4.0, 2.5),
        };
        let base = OcpSpec {
            length,
            horizon,
            cells_per_unit: 128,
            cells: None,
            steps: None,
            courant: 1.0,
            velocity: VelocitySpec::Constant { value: 2.0 },
            alpha: 0.125,
            control: equidistant,
            observation: None,
            initial: InitialSpec::Bump { center: 0.6, width: 0.8 },
            solver: SolverKind::Auto,
            tol: 1e-10,
        };
        Self {
            experiment: kind,
            base,
            lengths: match kind {
                ExperimentKind::DomainSweep | ExperimentKind::StabilizabilityDemo => vec![2.0, 4.0, 6.0, 8.0],
                _ => Vec::new(),
            },
            alphas: match kind {
                ExperimentKind::AlphaSweep => vec![0.125, 0.5, 2.0],
                _ => Vec::new(),
            },
            output: default_output(),
            plot: true,
            save_fields: true,
            resume: false,
            seed: 0,
            floor: default_floor(),
            center: None,
            gain: default_gain(),
            frames: default_frames(),
            samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let need = |v: &[f64], what: &str| {
            if v.is_empty() {
                Err(CliError::Config(format!("{} needs a nonempty `{what}` list", self.experiment.name())))
            } else if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                Err(CliError::Config(format!("`{what}` entries must be positive")))
            } else {
                Ok(())
            }
        };
        match self.experiment {
            ExperimentKind::DomainSweep | ExperimentKind::StabilizabilityDemo => need(&self.lengths, "lengths")?,
            ExperimentKind::AlphaSweep => need(&self.alphas, "alphas")?,
            _ => {}
        }
        if self.experiment == ExperimentKind::DomainSweep && self.lengths.len() < 3 {
            return Err(CliError::Config("domain-sweep needs at least 3 lengths".into()));
        }
        if !(self.floor > 0.0) || self.frames == 0 {
            return Err(CliError::Config("floor must be positive and frames nonzero".into()));
        }
        Ok(())
    }

    pub fn weight_center(&self) -> f64 {
        self.center.unwrap_or(match self.base.initial {
            InitialSpec::Bump { center, .. } => center,
            InitialSpec::Zero => 0.0,
        })
    }
}

/// Input of `check-domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainCheckSpec {
    pub domain: IntervalUnion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub big_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Feedback gain and speed used to report the resulting decay bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Transport,
    TransportVar,
    Continuity,
    Wave,
}

fn default_per_unit() -> usize {
    128
}

/// Input of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub length: f64,
    pub horizon: f64,
    #[serde(default = "default_per_unit")]
    pub cells_per_unit: usize,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub velocity: VelocitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<IntervalUnion>,
    #[serde(default)]
    pub gain: f64,
    #[serde(default)]
    pub initial: InitialSpec,
}

pub fn read_yaml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_yaml(&text)
}

pub fn parse_yaml<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_yaml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn to_yaml<T: Serialize>(value: &T) -> String {
    serde_yaml::to_string(value).expect("plain data serializes")
}
