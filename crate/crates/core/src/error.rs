use alloc::string::String;

/// Errors raised by the numerical routines, estimators and design optimizers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("objective evaluated to a non-finite value")]
    NonFiniteEvaluation,
    #[error("matrix is not symmetric within tolerance (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("minimum lies on the bracket boundary at {0}")]
    NoInteriorMinimum(f64),
    #[error("solver stopped with derivative magnitude {0:e} above tolerance")]
    NotConverged(f64),
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("design point {0} requires at least one sample")]
    ZeroCount(usize),
    #[error("complete separation detected; the maximum-likelihood estimate diverges")]
    SeparationDetected,
    #[error("all observations share a single price")]
    RankDeficient,
    #[error("all weighted directions are zero")]
    DegenerateDirection,
    #[error("budget {budget} is smaller than the {groups} groups that each need a sample")]
    BudgetTooSmall { budget: u64, groups: usize },
    #[error("no candidate allocation produced a finite objective")]
    NoFeasibleCandidate,
    #[error("cannot give every point {floor} samples out of {total}")]
    InfeasibleFloor { total: u64, floor: u64 },
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("unstable epidemic step: {0}")]
    UnstableStep(String),
    #[error("{discarded} of {replications} replications were discarded")]
    TooManyDiscards {
        discarded: usize,
        replications: usize,
    },
    #[error("prior sampling failed to produce a usable parameter after {0} attempts")]
    PriorExhausted(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
