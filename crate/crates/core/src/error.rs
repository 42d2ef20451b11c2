use thiserror::Error;

use crate::neural::TransportNet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trivial data: forcing and boundary values are both identically zero")]
    TrivialData,

    #[error("singular linear system (pivot {pivot:.3e}, condition estimate {condition:.3e})")]
    SingularSystem { pivot: f64, condition: f64 },

    #[error("solution value {min:.3e} is negative beyond tolerance; grid is too coarse for the discrete maximum principle")]
    NegativeSolution { min: f64 },

    #[error("nonpositive total mass {0:.3e}")]
    NonPositiveMass(f64),

    #[error("null space is not one-dimensional: {0}")]
    NullSpace(String),

    #[error("invariant density is not strictly positive: m[{index}] = {value:.3e}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("value {value} lies outside the domain {domain}")]
    DomainViolation { value: f64, domain: String },

    #[error("density value {value:.6e} exceeds rejection envelope {envelope:.6e}")]
    EnvelopeViolated { value: f64, envelope: f64 },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("problem size {n} exceeds the configured cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("batch size {batch} out of range for N = {n}")]
    BatchOutOfRange { batch: usize, n: usize },

    #[error("training diverged at iteration {iter} (loss {loss:e})")]
    Diverged {
        iter: usize,
        loss: f64,
        checkpoint: Box<TransportNet>,
    },

    #[error("half-ellipsoid mass {mass:.3e} is below the quadrature floor")]
    QuadratureFloor { mass: f64 },

    #[error("density vanishes in the interior at x = {x}")]
    VanishingDensity { x: f64 },

    #[error("all sampled pairs are coincident")]
    CoincidentPairs,

    #[error("{0} is unavailable without an exact map oracle")]
    Unavailable(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
