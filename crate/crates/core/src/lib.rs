//! Multivariate fractional Brownian motion (mfBm) and the second-order
//! theory of its continuous wavelet transform.
//!
//! * [`model`]: parameters, covariance kernel, existence test.
//! * [`synth`]: exact simulation by multivariate circulant embedding.
//! * [`wavelets`]: analyzing wavelets and the discretized CWT.
//! * [`wavstats`]: theoretical wavelet cross-covariance, scale law, large-lag asymptotics.
//! * [`spectral`]: cross-spectral density, coherence, integral representations of |v|^α.
//! * [`estimate`]: Monte Carlo estimators and power-law fits.
//! * [`io`]: CSV and `MFBM1` binary containers.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimate;
pub mod io;
pub mod model;
pub mod par;
pub mod quad;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod synth;
pub mod wavelets;
pub mod wavstats;

pub use error::{Error, Result};
pub use model::MfbmParams;
pub use par::Execution;
