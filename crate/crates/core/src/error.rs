use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// Column `column` (variable id) is numerically dependent on the columns before it.
    #[error("rank deficient: variable {column} is collinear with the preceding columns")]
    RankDeficient { column: usize },

    #[error("non-finite value produced during factorization")]
    NonFinite,

    #[error("position {position} is outside 1..={max}")]
    InvalidPosition { position: usize, max: usize },

    #[error("degenerate rotation at position {position}")]
    DegenerateRotation { position: usize },

    /// Predictor set whose triangular block is singular. Variable ids.
    #[error("singular predictor prefix {variables:?}")]
    SingularPrefix { variables: Vec<usize> },

    #[error("m = {m} exceeds the variable limit {limit}")]
    LimitExceeded { m: usize, limit: usize },

    #[error(
        "family (response {response}, parents {parents:#b}) does not match the current ordering"
    )]
    PositionMismatch { response: usize, parents: u64 },

    #[error("{bits} worker bits leave fewer than two free variables for m = {m}")]
    TooManyWorkers { bits: usize, m: usize },

    #[error("worker count {0} is not a power of two")]
    InvalidWorkerCount(usize),

    #[error("workers disagree on family (response {response}, parents {parents:#b}): rss {first} vs {second}")]
    MergeConflict {
        response: usize,
        parents: u64,
        first: f64,
        second: f64,
    },

    #[error("unknown method '{0}'")]
    UnknownMethod(String),
}

impl Error {
    /// True for failures caused by the numbers rather than the inputs' shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NonFinite
                | Error::DegenerateRotation { .. }
                | Error::SingularPrefix { .. }
                | Error::MergeConflict { .. }
        )
    }
}
