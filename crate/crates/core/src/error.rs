use thiserror::Error;

/// Failures raised by the samplers. None of these are ever swallowed: an
/// exact sampler that silently truncated would no longer be exact.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cumulant undefined at theta = {theta} (finite only below {bound})")]
    CumulantDomain { theta: f64, bound: f64 },

    #[error("no positive root of the increment cumulant for epsilon = {epsilon}; try a smaller epsilon")]
    NoTiltRoot { epsilon: f64 },

    #[error("epsilon = {epsilon} must lie strictly inside (0, {mean})")]
    InvalidEpsilon { epsilon: f64, mean: f64 },

    #[error("conditioning event has zero probability: {0}")]
    NullEvent(String),

    #[error("{what} exceeded its iteration ceiling of {limit}")]
    IterationCeiling { what: &'static str, limit: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
