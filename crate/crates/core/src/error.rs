use std::io;

use thiserror::Error;

/// Which pipeline stage an error belongs to. The CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Search,
    Plan,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown phoneme code `{0}`")]
    UnknownPhoneme(String),

    #[error("phone {index}: {reason}")]
    InvalidPhone { index: usize, reason: String },

    #[error("phone {index} overlaps or precedes phone {prev}")]
    Overlap { prev: usize, index: usize },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("frame {frame}: expected 257 parameters, found {found}")]
    Dimension { frame: usize, found: usize },

    #[error("word `{0}` is not in the pronunciation dictionary")]
    OutOfVocabulary(String),

    #[error("no timing source for word `{0}`")]
    MissingTiming(String),

    #[error("empty input sequence")]
    EmptyInput,

    #[error("query of {len} phones exceeds the limit of {max}")]
    QueryTooLong { len: usize, max: usize },

    #[error("empty frame region")]
    EmptyRegion,

    #[error("sample time {time:.6}s lies outside the parameter track")]
    OutOfTrackRange { time: f64 },

    #[error("blend window has no frames to blend into")]
    WindowTooLarge,

    #[error("corpus needs at least two sentences, found {0}")]
    InsufficientCorpus(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid edit: {0}")]
    InvalidEdit(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            Error::UnknownPhoneme(_)
            | Error::InvalidPhone { .. }
            | Error::Overlap { .. }
            | Error::Parse { .. }
            | Error::Dimension { .. }
            | Error::Io(_) => Stage::Parse,
            Error::OutOfVocabulary(_)
            | Error::MissingTiming(_)
            | Error::EmptyInput
            | Error::QueryTooLong { .. }
            | Error::InsufficientCorpus(_) => Stage::Search,
            Error::EmptyRegion
            | Error::OutOfTrackRange { .. }
            | Error::WindowTooLarge
            | Error::InvalidParameter(_)
            | Error::InvalidEdit(_) => Stage::Plan,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
