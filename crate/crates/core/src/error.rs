use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("equilibrium solve did not converge after {iterations} iterations (force residual {residual:.3e})")]
    EquilibriumNotConverged { iterations: usize, residual: f64 },

    #[error("quadrature did not converge: estimated error {error:.3e} exceeds tolerance {tolerance:.3e} ({context})")]
    QuadratureNotConverged { error: f64, tolerance: f64, context: &'static str },

    #[error("resonance: omega_0^2 = 4 lambda^2 makes kappa diverge (omega_0 = {omega_0}, lambda = {lambda})")]
    Resonance { omega_0: f64, lambda: f64 },

    #[error("time {t} is not a point of the kernel grid")]
    OffGrid { t: f64 },

    #[error("no root of Gamma_-(t) = 1 within t <= {window:.3e}: {reason}")]
    NoLifetimeRoot { window: f64, reason: String },

    #[error("Hilbert-space dimension {dim} exceeds the configured ceiling {ceiling}")]
    DimensionCeiling { dim: usize, ceiling: usize },

    #[error("truncated Gibbs trace deficit {deficit:.3e} for mode {mode} exceeds 1e-6")]
    TruncationInadequate { mode: usize, deficit: f64 },

    #[error("propagator tolerance breached at step {step}: {reason}")]
    PropagatorFailure { step: usize, reason: String },

    #[error("sinusoid fit failed: {reason}")]
    FitFailed { reason: String },

    #[error("ratio undefined: initial coherence {element} is zero")]
    UndefinedRatio { element: &'static str },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
