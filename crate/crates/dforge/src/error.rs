use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// [`Error::exit_code`] maps each variant onto the CLI contract: parameter
/// and parse problems exit with 2, everything that amounts to a failed
/// check exits with 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Param(String),
    #[error("alphabet error: {0}")]
    Alphabet(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("substitution is undefined on generator {0}")]
    MissingGenerator(String),
    #[error("Rips allocation error: {0}")]
    Allocation(String),
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("letter budget exceeded: need {needed} letters, budget is {budget}")]
    Budget { needed: String, budget: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("derivation step {step} failed: {msg}")]
    StepMismatch { step: usize, msg: String },
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("not a free basis: {0}")]
    NotFree(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Parse { .. } | Error::Alphabet(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
