use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{what} is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("norm drift {drift:e} at t = {time} us exceeds the limit {limit:e}")]
    NormDrift { drift: f64, time: f64, limit: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NormDrift { .. })
    }
}
