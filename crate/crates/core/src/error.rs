use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The design matrix does not have full column rank, or there are too few
    /// cases to leave a residual degree of freedom.
    #[error("unidentifiable fit: {0}")]
    Unidentifiable(String),

    #[error("response must be strictly positive for a Box-Cox transform (found {0})")]
    NonPositiveResponse(f64),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("strategy {strategy} is not applicable to {scenario} data")]
    NotApplicable {
        strategy: &'static str,
        scenario: &'static str,
    },

    #[error("evaluation dataset is empty")]
    EmptyEvaluation,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed results file: {0}")]
    Format(String),
}
