use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("vector is not primitive: gcd of entries is {gcd}")]
    NotPrimitive { gcd: num_bigint::BigInt },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("element is not in {tag}: {detail}")]
    Membership { tag: String, detail: String },
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{section}: {source}")]
    Section { section: String, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn in_section(self, section: &str) -> Self {
        Error::Section { section: section.into(), source: Box::new(self) }
    }
}
