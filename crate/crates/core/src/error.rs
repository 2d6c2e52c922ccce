use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("exact arithmetic capacity exceeded: {0}")]
    Capacity(String),

    #[error("singular matrix ({context})")]
    Singular { context: String },

    #[error("lambda = {lambda} outside the analyticity window (radius {radius:e}, complement sigma_min {sigma_min:e})")]
    OutsideWindow {
        lambda: f64,
        radius: f64,
        sigma_min: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
