use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants fall into two families: problems with what the caller
/// supplied (`is_user_error`) and numerical breakdowns during estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: String },

    #[error("line {line}: malformed edge line {text:?}")]
    MalformedLine { line: usize, text: String },

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("repeated vertex {0} in tuple")]
    RepeatedVertex(usize),

    #[error("vertex {vertex} out of range for a graph on {n} nodes")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("missing density input for {0}")]
    MissingDensity(String),

    #[error("overlap violated for cells: {0}")]
    Overlap(String),

    #[error("empty covariate cells: {0}")]
    EmptyCells(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("failed to converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    #[error("perfect separation detected in binary outcome model")]
    Separation,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when the error stems from bad input rather than numerics.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::NotPsd(_) | Error::NoConvergence { .. } | Error::Separation | Error::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
