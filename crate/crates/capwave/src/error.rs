//! Error type shared across the crate.

/// Errors produced by the numerical core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received parameters outside its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation requiring a zero-average function received one with a
    /// nonzero mean.
    #[error("nonzero mean ({mean:.3e}) passed to {op}")]
    NonzeroMean { op: &'static str, mean: f64 },

    /// The conformal factor degenerated (min K^2 at or below zero), so the
    /// surface parametrisation is no longer valid.
    #[error("conformal factor degenerate: min K^2 = {min_k2:.3e}")]
    ConformalityLoss { min_k2: f64 },

    /// An ODE integration failed (step-size underflow or step budget).
    #[error("ODE integration failed: {0}")]
    Integration(String),

    /// A spectral parameter fell into the Dirichlet spectrum where the
    /// requested quantity is undefined.
    #[error("mu = {mu:.6e} lies in the Dirichlet spectrum")]
    DirichletSpectrum { mu: f64 },

    /// Newton iteration failed to converge.
    #[error("Newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonFailure { residual: f64, iterations: usize },

    /// An internal consistency assertion failed; usually means the spatial
    /// resolution is too low (aliasing).
    #[error("internal consistency failure: {0}")]
    Internal(String),

    /// File or parse error in the I/O layer.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed solution or config file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
