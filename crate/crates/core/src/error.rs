use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("rank bound {rank} outside [1, {max}]")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The eigenvector matrix of a Liouvillian was too ill-conditioned for the
    /// similarity-transform exponential; use the scaling-and-squaring path.
    #[error(
        "eigendecomposition unusable (condition {condition:.3e}, residual {residual:.3e}); \
         use the scaling-and-squaring exponential instead"
    )]
    IllConditioned { condition: f64, residual: f64 },

    #[error("step dx = {0} must lie in [0, 1)")]
    StepTooLarge(f64),

    #[error("correlated local noise requires equal subsystem dimensions, got {0:?}")]
    UnequalBlocks(Vec<usize>),

    #[error("no uncensored samples")]
    AllCensored,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
