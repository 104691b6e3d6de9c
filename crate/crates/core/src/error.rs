use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid moment index {exponents:?}: {reason}")]
    InvalidMomentIndex { exponents: Vec<u8>, reason: &'static str },

    #[error("mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: &'static str, found: &'static str },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("argument outside domain of {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("{function} overflows for |x| > {bound}")]
    Overflow { function: &'static str, bound: f64 },

    #[error("wave packet is not localized on the circle (lambda = {lambda}): {reason}")]
    NotLocalized { lambda: f64, reason: String },

    #[error("target {target} outside attainable interval [{lo}, {hi}]")]
    Unattainable { target: f64, lo: f64, hi: f64 },

    #[error("sin(theta) = {sin_theta:e} below singularity floor {floor:e}")]
    Singularity { sin_theta: f64, floor: f64 },

    #[error("bracket algebra does not close: {0}")]
    NotClosed(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("trajectories cannot be aligned: {0}")]
    Alignment(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
