use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at `{node}`: {detail}")]
    ShapeMismatch { node: String, detail: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("missing entry tensor `{0}`")]
    MissingEntry(String),

    #[error("missing parameters for node `{0}`")]
    MissingParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tensor format error at byte {offset}: {detail}")]
    Format { offset: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(node: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            node: node.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
