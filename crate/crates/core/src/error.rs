use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{function}: argument {value} outside the domain ({reason})")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("could not place small cell {cell} in macrocell {macrocell} after {attempts} attempts")]
    Generation {
        macrocell: usize,
        cell: usize,
        attempts: usize,
    },

    #[error("coverage region of cell {cell} looks empty: no point accepted in {attempts} attempts")]
    EmptyRegion { cell: usize, attempts: usize },

    #[error("cell index {index} out of range for a deployment of {count} cells")]
    CellIndex { index: usize, count: usize },

    #[error("power-lognormal fit did not converge (best residual {residual:e})")]
    FitFailed { residual: f64 },

    #[error("{0}")]
    Numerical(String),

    #[error("empirical sample set is empty")]
    EmptySamples,

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
