use thiserror::Error;

/// Errors produced by the simulation and numerics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid query point")]
    InvalidQueryPoint,
    #[error("covariance not positive definite")]
    CovarianceNotPositiveDefinite,
    #[error("demography produced non-finite rate")]
    NonFiniteRate,
    #[error("dt too large for rates (guard value {guard:.4} > {limit})")]
    StepTooLarge { guard: f64, limit: f64 },
    #[error("population extinct")]
    Extinct,
    #[error("lineage record gap: {0}")]
    LineageRecordGap(String),
    #[error("lineage undefined where density vanishes")]
    VanishingDensity,
    #[error("CFL condition violated: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("solution blow-up")]
    BlowUp,
    #[error("adaptive dt floor reached")]
    DtFloor,
    #[error("no front detected")]
    NoFront,
    #[error("no stationary distribution")]
    NoStationaryDistribution,
    #[error("no sign change on bracket [{0}, {1}]")]
    NoSignChange(f64, f64),
    #[error("guard-band exhaustion")]
    GuardBand,
    #[error("too few individuals: {0} (need at least {1})")]
    TooFew(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no rows")]
    NoRows,
    #[error("schema mismatch: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
