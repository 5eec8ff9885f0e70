use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vectors must have dimension at least 1")]
    ZeroDimension,
    #[error("a distribution needs at least one atom")]
    EmptyDistribution,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("product distribution would have {atoms} atoms, cap is {cap}")]
    ProductCapExceeded { atoms: u128, cap: usize },
    #[error("horizon must be positive")]
    InvalidHorizon,
    #[error("transportation LP did not converge after {iterations} pivots")]
    LpNonConvergence { iterations: usize },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("iteration limit reached in {0}")]
    MaxIterations(&'static str),
    #[error("risk level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("matrix is not full row-rank (rank {rank} of {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },
    #[error("transportation cost has the wrong kind: {0}")]
    WrongCostKind(&'static str),
    #[error("multiplier search pinned at clamp lambda = {lambda:e}")]
    LambdaClamped { lambda: f64 },
    #[error("Riccati iteration did not converge in {iters} iterations")]
    RiccatiNoConvergence { iters: usize },
    #[error("closed loop is not stable (spectral radius {0})")]
    Unstable(f64),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
