use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("conductor {from} does not divide {to}")]
    NonDivisibleConductor { from: u32, to: u32 },
    #[error("conductor {0} outside the supported range 1..=128")]
    ConductorOutOfRange(u32),
    #[error("series has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("series has the wrong constant term for {0}")]
    BadConstantTerm(&'static str),
    #[error("L value is not invertible")]
    NonInvertibleL,
    #[error("no Laurent polynomial fit: {0}")]
    NoPolynomialFit(String),
    #[error("expected cancellation failed: {0}")]
    DivisibilityViolation(String),
    #[error("series is not invertible: {0}")]
    DivisionByZeroSeries(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("flatness closure failed at level {k}")]
    ClosureViolation { k: usize },
    #[error("origin constant mismatch at level {k}")]
    ConstantMismatch { k: usize },
    #[error("unstable psi key: genus {g}, {points} points")]
    UnstableInput { g: usize, points: usize },
    #[error("(g, m) = ({g}, {m}) is outside the stable range")]
    UnstableRange { g: usize, m: usize },
    #[error("needs z-order {need}, table has {have}")]
    AskLargerKmax { need: usize, have: usize },
    #[error("rho does not satisfy rho^n = -1")]
    InvalidRho,
    #[error("nonzero residual: {0}")]
    ResidualNonzero(String),
    #[error("coefficient {exp} requested beyond truncation {trunc}")]
    BeyondTruncation { exp: i64, trunc: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
