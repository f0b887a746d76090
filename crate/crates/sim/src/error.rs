use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] jscc_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("invalid sweep '{list}': {detail}")]
    Sweep { list: String, detail: String },
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

pub type SimResult<T> = std::result::Result<T, SimError>;
