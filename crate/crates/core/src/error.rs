use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A snapshot-basis expansion did not capture enough weight.
    #[error("expansion truncated at n_max = {n_max}: captured weight {weight:.3e} below 1 - {tolerance:.1e}")]
    Truncation {
        n_max: usize,
        weight: f64,
        tolerance: f64,
    },

    #[error("step size underflow at t = {t:.12e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:.12e}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("Re(omega) = {re:.3e} is not positive at t = {t:.12e}")]
    Positivity { t: f64, re: f64 },

    #[error("grid cutoff too small at t = {t:.6e}: boundary amplitude ratio {ratio:.3e} exceeds {limit:.1e}; increase S_max")]
    Cutoff { t: f64, ratio: f64, limit: f64 },

    #[error("time grid error: {0}")]
    Grid(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
