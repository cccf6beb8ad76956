//! Resonance fluorescence of a driven two-level emitter: analytic spectra and
//! correlation functions, instrument models, photon-stream simulation and
//! fitting.
//!
//! Units are SI throughout: seconds, rad/s for rates and Rabi frequencies,
//! and Hz for spectral axes and linewidths.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod correlation;
pub mod error;
pub mod fitting;
pub mod instrument;
pub mod mollow;
pub mod oracle;
pub mod params;
pub mod spectrum;
pub mod stochastic;
pub mod units;

pub use correlation::{CorrelationKind, CorrelationTrace};
pub use error::{Error, Result};
pub use params::TwoLevelParams;
pub use spectrum::{CoherentPart, SpectrumTrace};
