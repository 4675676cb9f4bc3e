use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid regularization: {0}")]
    InvalidRegularization(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate labels: need at least one positive and one negative")]
    DegenerateLabels,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stale trace: traces were produced by params version {trace}, current is {current}")]
    StaleTrace { trace: u64, current: u64 },
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged {
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("csv error at row {row}: {msg}")]
    Csv { row: usize, msg: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_invalid_input(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
