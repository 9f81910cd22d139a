use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spectrum outside Gamma_{k}^+: sigma_{index} = {value:e}")]
    ConeViolation { k: usize, index: usize, value: f64 },

    #[error("sampler gave up after {attempts} draws")]
    Sampling { attempts: usize },

    #[error("metric not positive definite at node {node:?}")]
    Geometry { node: Vec<f64> },

    #[error("boundary not umbilic: residual {residual:e}")]
    NotUmbilic { residual: f64 },

    #[error("unsupported chart: {0}")]
    UnsupportedChart(String),

    #[error("cone violation at node {node} with spectrum {spectrum:?}")]
    NodeCone { node: usize, spectrum: Vec<f64> },

    #[error("Newton: {0}")]
    Newton(NewtonFailure),

    #[error("continuation stuck at t = {last_t} (step {step:e})")]
    ContinuationStuck { last_t: f64, step: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonFailure {
    MaxIterations { iterations: usize, residual: f64 },
    LineSearch { residual: f64 },
    ConeGuard { iterations: usize },
    Singular,
}

impl std::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NewtonFailure::MaxIterations { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            NewtonFailure::LineSearch { residual } => {
                write!(f, "line search failed at residual {residual:e}")
            }
            NewtonFailure::ConeGuard { iterations } => {
                write!(f, "every damped step left the cone (iteration {iterations})")
            }
            NewtonFailure::Singular => write!(f, "singular Jacobian"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
