//! Camera source identification from sensor pattern noise.
//!
//! The pipeline extracts noise residuals with a wavelet-domain Wiener
//! filter, aggregates them into a camera fingerprint with the
//! maximum-likelihood estimator, post-processes reference fingerprints,
//! stores them as 8-bit PNGs, and matches probes with normalized
//! cross-correlation and PCE. A synthetic sensor simulator provides ground
//! truth, and `losskit` hosts the correlation-based training loss.

pub mod denoiser;
pub mod detector;
pub mod error;
pub mod extraction;
pub mod fft2;
pub mod imageio;
pub mod losskit;
pub mod quantizer;
pub mod raster;
pub mod roc;
pub mod scenario;
pub mod simulator;
pub mod wavelet;

pub use error::{Error, Result};
pub use extraction::Fingerprint;
pub use raster::{ImagePlane, NoiseResidual, Raster};
