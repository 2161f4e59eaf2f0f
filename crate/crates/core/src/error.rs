use thiserror::Error;

/// Errors raised anywhere in the model pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("conflicting prescriptions at node {node}: {first} K vs {second} K")]
    ConflictingConstraint { node: usize, first: f64, second: f64 },

    #[error("conductivity {value} W/(m K) is not positive at temperature {temperature} K")]
    EllipticityViolation { value: f64, temperature: f64 },

    #[error("singular linear system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    KrylovFailure { iterations: usize, residual: f64 },

    #[error("Newton did not converge in {iterations} iterations (residual norm {residual:e} W)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-physical temperature {value} K at node {node}")]
    NonPositiveTemperature { node: usize, value: f64 },

    #[error("transient step {step} at t = {time} s failed: {source}")]
    StepFailure {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage and step wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::StepFailure { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when the root cause is a solver failure rather than bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::SingularSystem { .. }
                | Error::KrylovFailure { .. }
                | Error::NonConvergence { .. }
                | Error::EllipticityViolation { .. }
                | Error::NonPositiveTemperature { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
