use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("polynomial degree {degree} exceeds ceiling {ceiling}")]
    DegreeCeiling { degree: usize, ceiling: usize },
    #[error("weight/type mismatch: ({0}, {1}) vs ({2}, {3})")]
    GradingMismatch(i64, u32, i64, u32),
    #[error("series is not a unit")]
    NotUnit,
    #[error("substituted series must have positive order")]
    ZeroOrder,
    #[error("not a monic irreducible (prime) polynomial: {0}")]
    NotPrime(String),
    #[error("insufficient precision: need {needed}, have {available}")]
    InsufficientPrecision { needed: usize, available: usize },
    #[error("prime {prime} divides level {level}")]
    LevelNotCoprime { prime: String, level: String },
    #[error("prime {prime} does not divide level {level} exactly")]
    NotExactDivisor { prime: String, level: String },
    #[error("no Atkin-Lehner rule for {0}")]
    UnknownWAction(String),
    #[error("{0} is not a modular form")]
    NotModular(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("triangular solve left nonzero residual at index {0}")]
    Residual(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by hitting a configured resource ceiling.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::DegreeCeiling { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
