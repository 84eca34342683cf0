use thiserror::Error;

/// Errors raised by bound assembly, special functions and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A precondition on the inputs is violated (bad configuration, unknown model, ...).
    #[error("{0}")]
    Validation(String),

    /// The self-referential MSE bound has no solution below the minimal sample size.
    #[error("n below minimal n = {minimal_n} (got n = {n})")]
    BelowMinimalN { n: u64, minimal_n: u64 },

    /// An iterative method stopped before meeting its tolerance.
    #[error("{op} did not converge: {detail}")]
    NonConvergence { op: &'static str, detail: String },

    /// Adaptive quadrature exhausted its interval budget.
    #[error("quadrature did not reach tolerance: estimate {estimate}, error estimate {error_estimate:e}")]
    Quadrature { estimate: f64, error_estimate: f64 },

    /// A bound evaluated to a non-finite or negative value.
    #[error("non-finite bound term `{label}` = {value}")]
    NonFinite { label: String, value: f64 },

    /// A simulated sample cannot be used (e.g. observation outside the support).
    #[error("degenerate sample in trial {trial}: {detail}")]
    DegenerateSample { trial: u64, detail: String },

    /// The conditioning event of a Monte Carlo conditional expectation was never hit.
    #[error("conditioning event {{M <= {eps}}} never occurred in {trials} trials")]
    EmptyConditioning { eps: f64, trials: u64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors caused by the caller's inputs rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Validation(_)
                | Error::BelowMinimalN { .. }
                | Error::DegenerateSample { .. }
                | Error::EmptyConditioning { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
