use thiserror::Error;

use crate::synth::EmbeddingReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("component index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("line {line}: {message}")]
    ParamsFile { line: usize, message: String },

    #[error("parameters are not admissible (smallest eigenvalue {min_eigenvalue:.6e})")]
    Inadmissible { min_eigenvalue: f64 },

    #[error("circulant embedding is not non-negative definite: {0}")]
    Embedding(EmbeddingReport),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid wavelet: {0}")]
    InvalidWavelet(String),

    #[error("wavelet decay certificate C2({available}) does not cover the required C2({required})")]
    InsufficientDecay { required: u32, available: u32 },

    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("scale {scale} is below the resolution threshold {min}")]
    ScaleBelowResolution { scale: f64, min: f64 },

    #[error("shift {shift} is too close to the path boundary (wavelet mass {mass:.3e} beyond edge)")]
    ShiftNearBoundary { shift: f64, mass: f64 },

    #[error("upper-bound regime: covariance is o(|h|^{exponent}), no leading-order equivalent")]
    UpperBoundRegime { exponent: f64 },

    #[error("zero frequency is excluded from spectral grids")]
    ZeroFrequency,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shift grid is not uniform")]
    NonUniformShifts,

    #[error("magnitude underflow: only {usable} usable points ({detail})")]
    Underflow { usable: usize, detail: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
