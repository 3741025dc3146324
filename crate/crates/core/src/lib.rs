//! Chi-square signal detection in the Gaussian sequence space model
//! `y_k = b_k θ_k + ε ξ_k` with ill-posed operators.
//!
//! The crate is organized around four pieces:
//!
//! * [`model`] — operator spectra, signal families with exact energy
//!   functionals, rate/design schedules and the observation sampler;
//! * [`detectors`] — the inverse (IP) and direct (DP) chi-square test
//!   statistics, their thresholds and calibration constants;
//! * [`maxisets`] — finite-grid membership predicates for the sets that
//!   characterize what each detector can reliably detect, the decimation
//!   operator, admissibility and the IP-to-DP embedding condition;
//! * [`montecarlo`] — seeded, deterministic Monte Carlo estimation of
//!   Type-I/Type-II errors and the verification experiments built on it.

pub mod detectors;
pub mod maxisets;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod seed;

pub use detectors::{ConstantSet, DetectorConfig, DetectorError, DetectorKind, TestDecision};
pub use maxisets::{AdmissibilityVerdict, BesovReport, EmbeddingReport, MembershipVerdict};
pub use model::{
    DesignSchedule, EpsilonGrid, ModelError, OperatorSpectrum, RateSchedule, Signal, SignalFamily,
};
pub use montecarlo::{McEstimate, PowerCurve};
