use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised by the forecasting toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conflicting rows for well {well_id} on {date}")]
    Conflict { well_id: String, date: NaiveDate },

    #[error("date grid gap for well {well_id}: missing {missing}")]
    Grid { well_id: String, missing: NaiveDate },

    #[error("wells are not aligned to a common date grid: {0}")]
    Misaligned(String),

    #[error("operation would produce an empty result: {0}")]
    Empty(String),

    #[error("wells never active: {}", .0.join(", "))]
    InertWells(Vec<String>),

    #[error("no production tests for well {0}; cannot estimate potential")]
    NoTests(String),

    #[error("insufficient history: need {required} steps, have {available}")]
    InsufficientHistory { required: usize, available: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("injection schedule exhausted for {well_id}/{phase} at step {step} (schedule has {len} steps)")]
    ScheduleExhausted {
        well_id: String,
        phase: String,
        step: usize,
        len: usize,
    },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::Numerical(_))
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
