use thiserror::Error;

/// Unified error type for the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("desynchronized stego stream: {0}")]
    Desync(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("stage {stage} failed: {inner}")]
    Stage { stage: String, inner: Box<Error> },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage: stage.to_string(),
                inner: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Extension for tagging results with the harness stage that produced them.
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
