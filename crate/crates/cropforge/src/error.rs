use std::path::PathBuf;

/// Error type shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file or directory could not be read or written.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An input file decoded fine but violates the expected layout
    /// (raster shape mismatch, unknown mask value, bad palette, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A caller violated an operation precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Configuration file or CLI override rejected during validation.
    #[error("config error: {0}")]
    Config(String),

    /// A training loop hit a non-recoverable state (non-finite loss, ...).
    #[error("training error at step {step} ({component}): {message}")]
    Training {
        step: u64,
        component: String,
        message: String,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for validation problems the user can
    /// fix in the config or arguments, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
