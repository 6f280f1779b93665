use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point fell outside the region a map or set is defined on.
    #[error("point outside domain: coordinate {coord} = {value} (allowed [{lo}, {hi}])")]
    Domain {
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The point is outside a non-box domain (ball, halfspace).
    #[error("point outside domain: distance {distance:e} to the set exceeds tolerance")]
    OutsideSet { distance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::OutsideSet { .. })
    }
}
