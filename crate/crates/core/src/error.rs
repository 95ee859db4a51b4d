use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("graph input is empty")]
    EmptyInput,

    #[error("invalid graph document: {0}")]
    InvalidDocument(String),

    #[error("node {0:?} is missing an id")]
    MissingId(usize),

    #[error("edge references unknown node {0:?}")]
    UnknownNode(String),

    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("layout has {layout} positions but graph has {graph} nodes")]
    LayoutMismatch { layout: usize, graph: usize },

    #[error("invalid reward spec: {0}")]
    InvalidReward(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),

    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),

    #[error("unknown graph {0:?}")]
    UnknownGraph(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
