use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("input domain error: {0}")]
    Domain(String),

    /// The request exceeds what the implementation is sized for.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A least-squares design matrix lost rank.
    #[error("degenerate design: {0}")]
    Degenerate(String),

    /// An expectation that does not exist (absorption is not almost sure).
    #[error("divergent expectation: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
