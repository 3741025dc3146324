//! The Gaussian sequence space model `y_k = b_k theta_k + eps xi_k`:
//! spectra, signals, schedules, grids and the observation sampler.

mod grid;
mod sample;
mod schedule;
mod signal;
mod spectrum;
pub(crate) mod tail;

pub use grid::EpsilonGrid;
pub use sample::sample_observations;
pub use schedule::{evaluate_schedules, DesignSchedule, RateSchedule};
pub use signal::{Signal, SignalFamily};
pub use spectrum::{OperatorSpectrum, SpectrumPrefix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("sequence is not square-summable: {0}")]
    NonSummable(String),
    #[error("running sum exceeded the representable range")]
    Overflow,
    #[error("epsilon {0} is not tabulated in this schedule")]
    EpsilonNotTabulated(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
