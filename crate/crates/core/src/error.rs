use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no p-values")]
    EmptyInput,

    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),

    /// Data row (1-based, header excluded) whose value lies outside [0, 1].
    #[error("row {0}: p-value outside [0, 1]")]
    ValueOutOfRange(usize),

    #[error("row {0}: cannot parse value")]
    ParseError(usize),

    #[error("row {0}: duplicate label `{1}`")]
    DuplicateLabel(usize, String),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("expected {expected} weights, got {got}")]
    WeightLengthMismatch { expected: usize, got: usize },

    #[error("threshold regime {got:?} cannot be used by a {expected:?} engine")]
    RegimeMismatch {
        expected: crate::classic::Regime,
        got: crate::classic::Regime,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid threshold sequence: {0}")]
    InvalidThresholds(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid shape sequence: {0}")]
    InvalidShape(String),

    #[error("Dirichlet draw degenerated to zero total mass after {0} attempts")]
    DegenerateDraw(usize),

    #[error("bin {bin} out of range 1..={m}")]
    IndexOutOfRange { bin: usize, m: usize },

    #[error("no draws to summarize")]
    EmptyDraws,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
