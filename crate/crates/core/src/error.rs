use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    /// An argument lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration data.
    #[error("configuration error: {0}")]
    Config(String),

    /// The nodal evaluation matrix could not be inverted reliably.
    #[error("node layout {layout:?} gives an ill-conditioned evaluation matrix (condition number {condition:e})")]
    IllConditioned { layout: Vec<f64>, condition: f64 },

    /// A zero crack flexibility: the interface nodes must be merged instead.
    #[error("crack flexibility is zero; merge the interface nodes instead of inserting a spring")]
    NoCrack,

    /// A load was placed on an interior DOF of a wavelet element.
    #[error("load on interior DOF {0}: point loads must act on (or be transferred equivalently to) boundary nodal DOFs")]
    InteriorLoad(usize),

    /// Dense or banded factorization failed at a Laplace frequency.
    #[error("singular system at frequency index {k}, s = {s}")]
    SingularFrequency { k: usize, s: Complex64 },

    /// Factorization failure outside the frequency sweep.
    #[error("solver error: {0}")]
    Solver(String),

    /// The input signal does not fit in the transform window.
    #[error("signal has {len} samples but the Laplace grid holds only {n}; use a larger grid")]
    SignalTooLong { len: usize, n: usize },

    /// An analysis step found too little data.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for WaveError {
    fn from(e: std::io::Error) -> Self {
        WaveError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WaveError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(WaveError::Domain(msg.into()))
}
