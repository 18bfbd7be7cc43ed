//! Error types shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    /// A root or pole location does not lie in the parameter field.
    #[error("field extension required: {0}")]
    FieldExtension(String),
    /// A series was queried outside its guaranteed-valid window.
    #[error("series window exceeded: {0}")]
    SeriesWindow(String),
    /// The input curve violates a structural invariant.
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    /// Parse error in the expression grammar or a curve-spec file.
    #[error("parse error: {0}")]
    Parse(String),
    /// A precondition on an operation was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An internal consistency certificate failed; signals an engine bug.
    #[error("internal consistency failure: {0}")]
    Internal(String),
    /// The requested check needs data the curve does not declare.
    #[error("unsupported check: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
