//! Least-squares estimation of emitter and instrument parameters.

mod dephasing;
mod fit;
pub mod lm;
mod model;

pub use dephasing::{dephasing_power_scan, DephasingLaw, DephasingScan, LawFit};
pub use fit::{bootstrap_stderr, fit, input_digest, FitReport, FitResult};
pub use model::{evaluate_model, FitProblem, FreeParam, ModelKind, Param};
