use thiserror::Error;

/// Errors raised by the library. Each variant names the violated condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate spacetime: {0}")]
    DegenerateSpacetime(String),
    #[error("root bracket failure: {0}")]
    RootBracketFailure(String),
    #[error("angular sector mismatch: {0}")]
    SectorMismatch(String),
    #[error("matching system rank deficiency: numerical rank {rank}, expected 2")]
    RankDeficiency { rank: usize },
    #[error("point outside the static region: {0}")]
    HorizonDomain(String),
    #[error("coordinate axis singularity at theta = {0}")]
    AxisSingularity(f64),
    #[error("degenerate trapping: {0}")]
    DegenerateTrapping(String),
    #[error("CFL number {cfl} exceeds the limit {limit}")]
    CflViolation { cfl: f64, limit: f64 },
    #[error("non-finite field value at step {step}")]
    NonfiniteField { step: usize },
    #[error("Frobenius series did not converge: {0}")]
    SeriesDivergence(String),
    #[error("local exponents differ by the integer {0}")]
    IndicialCollision(i64),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
