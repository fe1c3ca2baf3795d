use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate margin in {}: a row or column total is zero", stratum_label(*.replicate))]
    DegenerateMargin { replicate: Option<usize> },

    #[error("weighted variance sum in the denominator is zero")]
    ZeroDenominator,

    #[error("observation type does not match the sampling scenario: {0}")]
    ScenarioMismatch(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("p-value {0} lies outside [0, 1]")]
    InvalidP(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate moments: mean {mean}, variance {variance}")]
    DegenerateMoments { mean: f64, variance: f64 },

    #[error("need at least {needed} samples for a moment fit, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("only {got} null p-values below z = {z}; at least {needed} are needed to fit the tail")]
    InsufficientTail { got: usize, needed: usize, z: f64 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("locus is not polymorphic: fewer than two alleles observed")]
    NotPolymorphic,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

fn stratum_label(replicate: Option<usize>) -> String {
    match replicate {
        Some(k) => format!("replicate {k}"),
        None => "table".to_string(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
