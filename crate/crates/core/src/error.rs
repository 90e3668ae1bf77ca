use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("integrator step size underflow: {substeps:e} substeps required per control interval")]
    StepUnderflow { substeps: f64 },
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("episode already finished; call reset first")]
    EpisodeFinished,
    #[error("replay buffer holds {available} eligible transitions, {needed} required")]
    InsufficientData { needed: usize, available: usize },
    #[error(
        "training aborted after {consecutive} consecutive non-finite losses at update {update}"
    )]
    Diverged { update: usize, consecutive: usize },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            requirement,
            value,
        }
    }
}
