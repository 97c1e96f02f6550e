//! Experiment orchestration and plotting.

pub mod commands;
pub mod csv_io;
pub mod experiments;
pub mod plan;
pub mod plot;

use std::path::Path;

use thiserror::Error;

use hyploc_core::analysis::AnalysisError;
use hyploc_core::characteristics::FlowError;
use hyploc_core::domain_check::DomainError;
use hyploc_core::geometry::GeometryError;
use hyploc_core::ocp::OcpError;
use hyploc_core::semigroup::SemigroupError;

pub use commands::{run, Cli, Command, Outcome};
pub use experiments::{run_experiment, RunReport};
pub use plan::ExperimentPlan;
pub use plot::emit_plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {inner}")]
    Context { context: String, inner: Box<CliError> },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn context(self, context: &str) -> Self {
        Self::Context {
            context: context.to_string(),
            inner: Box::new(self),
        }
    }

    /// 2 for numerical and I/O failures, 3 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 3,
            Self::Numeric(_) | Self::Io { .. } => 2,
            Self::Context { inner, .. } => inner.exit_code(),
        }
    }
}

impl From<OcpError> for CliError {
    fn from(e: OcpError) -> Self {
        match e {
            OcpError::Singular { .. } | OcpError::NotConverged { .. } | OcpError::Numeric(_) | OcpError::Flow(FlowError::Numeric(_)) => {
                Self::Numeric(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InsufficientData { .. } => Self::Numeric(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Numeric(_) => Self::Numeric(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<SemigroupError> for CliError {
    fn from(e: SemigroupError) -> Self {
        match e {
            SemigroupError::Flow(f) => f.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}
