//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong while evaluating Finsler quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },

    #[error("invalid jet configuration: {0}")]
    InvalidJet(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient jet order: requested degree {requested}, jet order {order}")]
    InsufficientOrder { requested: u32, order: u32 },

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },

    #[error("variable `{name}` at column {column}: index out of range for dimension {dim}")]
    VariableOutOfRange { name: String, column: usize, dim: usize },

    #[error("metric spec schema violation: {0}")]
    Schema(String),

    #[error("symmetry conflict: {0}")]
    SymmetryConflict(String),

    #[error("point outside the admissible domain: {0}")]
    OutsideDomain(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unknown builtin metric `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampling exhausted: {0}")]
    SamplingExhausted(String),
}

impl FinslerError {
    /// True for errors caused by malformed user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            FinslerError::Syntax { .. }
                | FinslerError::UnknownIdentifier { .. }
                | FinslerError::VariableOutOfRange { .. }
                | FinslerError::Schema(_)
                | FinslerError::SymmetryConflict(_)
                | FinslerError::UnknownBuiltin(_)
                | FinslerError::InvalidArgument(_)
                | FinslerError::IndexOutOfRange { .. }
                | FinslerError::InvalidJet(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
