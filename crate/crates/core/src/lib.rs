//! Wavelet scattering front-ends for speech deepfake detection.

pub mod classifier;
pub mod config;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod filterbank;
pub mod frontends;
pub mod metrics;
pub mod scattering1d;
pub mod scattering2d;
pub(crate) mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Exec;
