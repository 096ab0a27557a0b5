use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("conflicting votes for comment {comment_id:?} by voter {voter_id:?}")]
    ConflictingVote {
        comment_id: String,
        voter_id: String,
    },

    #[error("matrix has no observed entries")]
    EmptyMatrix,

    #[error("precondition violated: {0}")]
    PrecondViolated(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("need at least 2 comments, got {0}")]
    TooFewComments(usize),

    #[error("need at least 2 observed votes, got {0}")]
    TooFewVotes(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("external solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::ConflictingVote { .. }
            | Error::Parse(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::InvalidModel(_) => 3,
            Error::EmptyMatrix
            | Error::PrecondViolated(_)
            | Error::TooFewComments(_)
            | Error::TooFewVotes(_)
            | Error::TooLarge(_)
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::InvalidParams(_) => 4,
            Error::Solver(_) => 1,
        }
    }
}
