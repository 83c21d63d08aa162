use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance {index} is not symmetric positive definite")]
    NotPositiveDefinite { index: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("empty cluster")]
    EmptyCluster { cluster: usize },

    #[error("centroid of cluster {cluster} does not match the mean of its members (off by {offset:e})")]
    CentroidMismatch { cluster: usize, offset: f64 },

    #[error("isolated point {index}: zero degree in the similarity matrix")]
    IsolatedPoint { index: usize },

    #[error("resolution unbounded; reduce k_max (every cluster is a singleton)")]
    UnboundedResolution,

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    FixedPointNonConvergence { iterations: usize, residual: f64 },

    #[error("at k = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_k(self, k: usize) -> Self {
        Error::AtK {
            k,
            source: Box::new(self),
        }
    }
}
