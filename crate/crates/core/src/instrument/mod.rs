//! Everything between the emitter and the recorded data.

mod background;
mod cavity;
mod hbt;
pub(crate) mod michelson;
mod response;

pub use background::{
    sbr_curves, BackgroundModel, Calibration, SbrCurves, DEFAULT_DARK_RATE, SBR_AT_SATURATION, SIGNAL_AT_SATURATION,
};
pub use cavity::{
    convolve_lorentzian, convolve_lorentzian_numeric, fp_scan, ScanComponents, ScanTrace, SAMPLES_PER_FWHM,
};
pub use hbt::{irf_convolve_correlation, InstrumentView};
pub use michelson::michelson_visibility;
pub use response::{gaussian_fwhm, InstrumentResponse, GAUSSIAN_FWHM_PER_SIGMA};
