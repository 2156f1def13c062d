use alloc::string::String;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A variable or node name that does not exist.
    #[error("unknown name `{0}`")]
    UnknownName(String),
    /// Caller passed arguments that violate an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// A table, alphabet or kernel failed validation.
    #[error("invalid model: {0}")]
    Model(String),
    /// A closed form was requested outside the region where it holds.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured size cap was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Dataset or experiment configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),
    /// Two routes that must agree did not, or a value left its valid range.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Optimisation ran out of budget before meeting its tolerance.
    #[error("not converged after {steps} steps (best objective {best})")]
    Unconverged { steps: usize, best: f64 },
    /// Gradient descent loss kept increasing; the step size is too large.
    #[error("diverged at step {step}: loss increased {streak} consecutive evaluations")]
    Divergence { step: usize, streak: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
