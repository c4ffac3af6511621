use thiserror::Error;

use crate::grid::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("interior is empty after stripping {strip} nodes from an axis of length {len}")]
    EmptyInterior { strip: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("CFL condition violated: courant number {courant:.4} exceeds {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("{solver} did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("rank-deficient local system: {0}")]
    RankDeficient(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("derivative {index} failed: {source}")]
    Derivative {
        index: MultiIndex,
        #[source]
        source: Box<Error>,
    },

    #[error("missing derivative {0}")]
    MissingDerivative(MultiIndex),

    #[error("term `{0}` is not part of the shared term universe")]
    TermNotInUniverse(String),

    #[error("term `{0}` is not present in the equation")]
    TermAbsent(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
