//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in an input file, with 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An edge endpoint or label index that does not fit the graph.
    #[error("node index {index} out of range (num_nodes = {num_nodes})")]
    IndexOutOfRange { index: usize, num_nodes: usize },

    /// Mismatched dimensions between two inputs that must agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value outside its documented range.
    #[error("invalid config: {0}")]
    Config(String),

    /// A Bernoulli probability outside [0, 1].
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    /// kth-order statistic requested on an empty multiset.
    #[error("empty weight multiset")]
    EmptyWeights,

    /// A cluster column with no member nodes.
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    /// An affinity row summing to zero, which cannot be degree-normalized.
    #[error("affinity row {0} has zero sum")]
    ZeroRowSum(usize),

    /// Eigensolver ran out of iterations.
    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },

    /// Training produced a non-finite loss.
    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
