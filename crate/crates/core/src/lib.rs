//! Detection of multiple sinusoids in colored Gaussian noise via
//! periodograms standardized with training data sets.
//!
//! The pipeline: compute the periodogram of the observation, divide it
//! frequency-wise by the averaged periodogram of `L` independent noise
//! training series, and threshold a test statistic of the standardized
//! ordinates. Standardization makes the null distribution of every
//! ordinate an `F(2, 2L)` variable regardless of the (unknown) noise PSD,
//! so the resulting detectors are constant-false-alarm-rate.
//!
//! Modules:
//! - [`specfun`]: incomplete beta/gamma, central and noncentral chi-squared
//!   and F CDFs.
//! - [`spectral`]: periodogram, averaged periodogram, standardization.
//! - [`sigmodel`]: sinusoid and Keplerian radial-velocity generators.
//! - [`noisegen`]: AR and tabulated-PSD Gaussian noise, training sets,
//!   reproducible substreams.
//! - [`arfit`]: Yule-Walker AR fitting and FPE order selection.
//! - [`detectors`]: the test statistics and their p-value pathways.
//! - [`analytic`]: closed-form false-alarm and detection rates.
//! - [`mcharness`]: Monte-Carlo experiments, ROC curves, dispersion and
//!   detectability studies.
//! - [`gof`]: Kolmogorov-Smirnov helpers for distributional checks.

pub mod analytic;
pub mod arfit;
pub mod detectors;
pub mod error;
pub mod gof;
pub mod mcharness;
pub mod noisegen;
pub mod sigmodel;
pub mod specfun;
pub mod spectral;

mod fft;
mod linalg;

pub use error::{Error, Result};
