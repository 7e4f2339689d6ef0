use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("{what} = {value} is outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A constructed object violates one of its invariants.
    #[error("invalid {object}: {reason}")]
    Invalid { object: &'static str, reason: String },

    /// A bracketing search ran past its cap or an iteration budget ran out.
    #[error("no convergence in {routine}: {detail}")]
    NonConvergence { routine: &'static str, detail: String },

    /// The inputs of an experiment do not satisfy its ordering precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain { what, value, expected }
    }

    pub(crate) fn invalid(object: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            object,
            reason: reason.into(),
        }
    }
}
