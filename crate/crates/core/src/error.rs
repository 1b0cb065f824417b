use thiserror::Error;

/// Errors produced by the solver and simulation layers.
///
/// Strategy-invariant violations are *not* errors; they are returned as data
/// by [`crate::strategy::Strategy::validate`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error on [{lo}, {hi}]: {msg}")]
    Numeric { lo: f64, hi: f64, msg: String },

    #[error("singular linear system on [{lo}, {hi}]")]
    SingularSystem { lo: f64, hi: f64 },

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("insufficient stencil at x = {x}: {msg}")]
    InsufficientStencil { x: f64, msg: String },

    #[error("non-integrable horizon: {0}")]
    NonIntegrableHorizon(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
