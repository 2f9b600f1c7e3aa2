use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("row {row}: cannot parse `{value}` as a number for column `{column}`")]
    ParseNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: non-finite value for numeric column `{column}`")]
    NonFinite { row: usize, column: String },
    #[error("column `{column}` is not binary after level mapping (extra level `{level}`)")]
    NonBinary { column: String, level: String },
    #[error("row {row}: missing value in column `{column}`")]
    Missing { row: usize, column: String },
    #[error("dataset is empty")]
    Empty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("group is empty: {0}")]
    EmptyGroup(String),
    #[error("no unprotected (S=0) units: the comparison frequency is undefined")]
    NoReferenceGroup,
    #[error("not enough eligible units: need {needed}, have {available} ({what})")]
    InsufficientUnits {
        what: String,
        needed: usize,
        available: usize,
    },
    #[error("all scores are undefined")]
    AllUndefined,
}
