use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural integrity: {0}")]
    StructuralIntegrity(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("provider unavailable after {retries} retries: {reason}")]
    ProviderUnavailable { retries: u32, reason: String },

    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    #[error("stage ordering: {0}")]
    StageOrdering(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigendecomposition did not converge within {iterations} iterations")]
    Numerical { iterations: usize },

    #[error("degenerate spectrum: lambda_max = {0}")]
    DegenerateSpectrum(f64),

    #[error("filter fitting diverged at step {step} (loss = {loss})")]
    Divergence { step: usize, loss: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("unknown entity: {0}")]
    Lookup(String),

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
