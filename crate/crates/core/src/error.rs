use thiserror::Error;

use crate::request::{Phase, RequestId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("illegal phase transition {from:?} -> {to:?}")]
    IllegalTransition { from: Phase, to: Phase },

    #[error("request {0} already produced all of its tokens")]
    AlreadyFinished(RequestId),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("request {0} is already resident in the buffer")]
    DuplicateRequest(RequestId),

    #[error("request {0} is not resident in the buffer")]
    UnknownRequest(RequestId),

    #[error("buffer capacity of {max_slots} slots exceeded")]
    CapacityExceeded { max_slots: usize },

    #[error("shuffle plan is stale: planned at generation {planned}, layout is at {current}")]
    StalePlan { planned: u64, current: u64 },

    #[error("oracle input of length {len} exceeds bound {bound}")]
    OracleBoundExceeded { len: usize, bound: usize },

    #[error("stream has no active requests")]
    EmptyStream,

    #[error("trace is incomplete: {0}")]
    IncompleteTrace(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{0}")]
    RunFailed(String),
}

impl Error {
    /// Process exit status used by the `tfsim` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParam(_) => 1,
            Error::CalibrationFailed(_) => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}
