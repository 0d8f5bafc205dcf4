//! Error type shared across the crate.

use chrono::NaiveDate;
use thiserror::Error;

use crate::timeseries::ShiftConfig;

#[derive(Debug, Error)]
pub enum Error {
    #[error("samples are not sorted by timestamp (index {index})")]
    UnsortedSamples { index: usize },

    #[error("incomplete day{}: {reason}", date.map(|d| format!(" {d}")).unwrap_or_default())]
    IncompleteDay {
        date: Option<NaiveDate>,
        reason: String,
    },

    #[error("shift of {steps} steps does not fit a series of length {len}")]
    ShiftTooLarge { steps: usize, len: usize },

    #[error("series too short: need at least {need} points, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("xml: {0}")]
    Xml(String),

    #[error("missing required channel {0}")]
    MissingChannel(String),

    #[error("invalid event list: {0}")]
    InvalidEvents(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("T50 must be positive, got {t50} minutes for dose {dose}")]
    NonPositiveT50 { t50: f64, dose: f64 },

    #[error("invalid absorption parameters: {0}")]
    InvalidBergerParams(String),

    #[error("empty model at lambda = {lambda}: thresholding removed every term")]
    EmptyModel { lambda: f64 },

    #[error("library/target shape mismatch: {rows} rows x {cols} columns vs {targets} targets")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        targets: usize,
    },

    #[error("underdetermined system: {rows} rows for {cols} columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("day {date} is missing derived absorption channels; preprocess it first")]
    MissingDerivedChannels { date: NaiveDate },

    #[error("fit failed for day {date} under shifts {shifts}: {source}")]
    FitFailed {
        date: NaiveDate,
        shifts: ShiftConfig,
        #[source]
        source: Box<Error>,
    },

    #[error("synthetic model diverged on day {date}; choose a stabler true model or tighter inputs")]
    DivergentTruth { date: NaiveDate },

    #[error("no complete days in the dataset")]
    NoCompleteDays,

    #[error("grid search needs at least 2 training days, got {0}")]
    InsufficientTrainDays(usize),

    #[error("empty shift grid")]
    EmptyShiftGrid,

    #[error("every grid-search cell failed; no usable records")]
    AllCellsFailed,

    #[error("every candidate model diverged on every validation day")]
    AllModelsDiverged,

    #[error("empty test set")]
    EmptyTestSet,

    #[error("model was trained on {train_date}, which is part of the test set")]
    TrainTestOverlap { train_date: NaiveDate },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("unknown config key `{key}`")]
    UnknownConfigKey { key: String },

    #[error("missing artifact {path}; run `{hint}` first")]
    MissingArtifact { path: String, hint: String },

    #[error("invalid synth spec: {0}")]
    InvalidSynthSpec(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
