use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("simulation became unstable at step {step}: max |Ez| = {max_field:e}")]
    StabilityViolation { step: usize, max_field: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("could not satisfy sampling constraints after {attempts} attempts")]
    Constraint { attempts: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sample {0} not found")]
    NotFound(u64),

    #[error("trace {trace} is all zeros")]
    DegenerateTrace { trace: usize },

    #[error("scan is all zeros")]
    DegenerateScan,

    #[error("inconsistent model configuration: {0}")]
    Config(String),

    #[error("sample {id}: {message}")]
    Data { id: u64, message: String },

    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("no samples to evaluate")]
    EmptyInput,

    #[error("material catalog is empty")]
    EmptyCatalog,

    #[error("sample {id}: {source}")]
    Sample {
        id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Nn(#[from] gprwi_nn::NnError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
