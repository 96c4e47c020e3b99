use thiserror::Error;

/// Errors raised by the provisioning core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph has {nodes} nodes, exact search is limited to {limit}")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("integrity error in `{field}`: {detail}")]
    Integrity { field: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn integrity(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Integrity {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
