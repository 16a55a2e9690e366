use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid involution: {0}")]
    Gamma(String),
    #[error("infinite leaf `{0}` has no finite quotient here")]
    InfiniteLeaf(String),
    #[error("group order {order} exceeds cap {cap}")]
    CapExceeded { order: u128, cap: u128 },
    #[error("table does not define a group: {0}")]
    NotAGroup(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("polynomial error: {0}")]
    Poly(String),
    #[error("invalid decomposition: {0}")]
    Invalid(String),
    #[error("map is not cellular: {0}")]
    NonCellular(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
