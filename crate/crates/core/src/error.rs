use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: time {time} does not exceed the previous time {previous}")]
    NonMonotoneTime { line: u64, time: f64, previous: f64 },

    #[error("line {line}: cumulative failures {count} drop below the previous count {previous}")]
    NonMonotoneCount {
        line: u64,
        count: u64,
        previous: u64,
    },

    #[error("line {line}: negative value {value}")]
    NegativeValue { line: u64, value: String },

    #[error("dataset has no failure points")]
    EmptyDataset,

    #[error("need at least {needed} usable points, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    OutOfRange(String),

    #[error("objective is not finite at the initial simplex vertex {vertex}")]
    NonFiniteStart { vertex: usize },

    #[error("littlewood-verrall shape alpha = {alpha} is not above 1; expected times between failures are infinite")]
    ShapeNotAboveOne { alpha: f64 },

    #[error("{model}: {source}")]
    ModelFit {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown model '{name}'; supported: {supported}")]
    UnknownModel { name: String, supported: String },

    #[error("curves mix models '{first}' and '{other}'")]
    MixedModels { first: String, other: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_model(self, model: &str) -> Error {
        Error::ModelFit {
            model: model.to_string(),
            source: Box::new(self),
        }
    }
}
