use std::path::PathBuf;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file did not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// Shapes do not agree, or a raster is too small for the operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid parameter or pipeline configuration.
    #[error("config error: {0}")]
    Config(String),

    /// The input makes the statistic undefined (constant rasters, zero denominators).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A sample value is out of the admissible domain.
    #[error("value error: {0}")]
    Value(String),

    /// Missing or empty inputs.
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
