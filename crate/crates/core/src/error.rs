use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDateTime;

use crate::grid::VariableId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid variable: {0}")]
    InvalidVariable(String),

    #[error("field {variable}: {reason}")]
    InvalidField { variable: VariableId, reason: String },

    #[error("required field {0} is missing")]
    MissingField(VariableId),

    #[error("{what} is empty")]
    Empty { what: &'static str },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("percentile {requested} not in cube (available: {available:?})")]
    UnknownPercentile { requested: f64, available: Vec<f64> },

    #[error("forecast/truth alignment failed; missing truth for {} valid time(s): {missing:?}", missing.len())]
    Alignment { missing: Vec<NaiveDateTime> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
