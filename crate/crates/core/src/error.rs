use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input letter, sum or parameter lies outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested enumeration exceeds the desk-scale guard.
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    /// A bit stream could not be parsed into a codeword.
    #[error("framing error: {0}")]
    Framing(String),
    /// A network description is malformed (cyclic tree, unknown node, ...).
    #[error("invalid network: {0}")]
    Network(String),
    /// An internal protocol invariant was broken.
    #[error("protocol bug: {0}")]
    Protocol(String),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn network(msg: impl Into<String>) -> Self {
        Error::Network(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
