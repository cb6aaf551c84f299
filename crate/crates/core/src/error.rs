use thiserror::Error;

/// Errors raised by the numerics and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid law parameter: {0}")]
    InvalidParameter(String),

    #[error("nu diverges for this law (tau = {tau}); a finite second moment is required")]
    NuDiverges { tau: f64 },

    #[error("mean degree is not finite or not positive")]
    NonIntegrable,

    #[error("zeta(s) requires s > 1, got {0}")]
    ZetaDomain(f64),

    #[error("odd stub count {0}; apply the evenness fix before pairing")]
    OddStubCount(u64),

    #[error("invalid arguments: {0}")]
    InvalidArgument(String),

    #[error("branching process is not supercritical (nu = {0})")]
    Subcritical(f64),

    #[error("fixed-point iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("no pair of W samples with positive product")]
    NoSurvivingPairs,

    #[error("empty sample")]
    EmptySample,

    #[error("every sample is infinite; a finite-only curve is undefined")]
    AllInfinite,

    #[error("curves do not overlap at shift {0}")]
    EmptyOverlap(i64),

    #[error("summation window too small: {0}")]
    WindowTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;
