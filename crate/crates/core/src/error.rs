use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("invalid bundle: {0}")]
    InvalidBundle(String),

    #[error("level {0} has no base space")]
    NoBase(usize),

    #[error("path is in collision")]
    PathInCollision,

    #[error("paths do not share endpoints")]
    EndpointMismatch,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("leaf level: node {0} lives on the full space and cannot be expanded")]
    LeafLevel(usize),

    #[error("graph is missing the {0} vertex")]
    MissingVertex(&'static str),

    #[error("{which} infeasible at level {level}")]
    Infeasible { which: &'static str, level: usize },

    #[error("busy: an expansion of node {0} is already running")]
    Busy(usize),

    #[error("no expansion is running")]
    NotBusy,

    #[error("unknown builtin scenario `{0}`")]
    UnknownBuiltin(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("tree document error: {0}")]
    TreeFormat(String),
}
