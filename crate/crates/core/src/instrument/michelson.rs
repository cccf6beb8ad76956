//! First-order interference visibility of the scattered light.

use crate::correlation::{CorrelationKind, CorrelationTrace};
use crate::error::{Error, Result};
use crate::mollow::{coherent_fraction, mollow_coefficients};
use crate::params::TwoLevelParams;

/// Fringe visibility against path delay:
/// `V(τ) = V₀ |f e^{−|τ|/(2τc)} + (1 − f) g¹_inc(τ)|`, with `f` the coherent
/// fraction, `τc` the coherence time of the coherent part and `g¹_inc` the
/// normalized incoherent field correlation.
///
/// `laser_tau` bounds `coherent_tau`: elastic scattering cannot be more
/// coherent than the laser that drives it.
pub fn michelson_visibility(
    params: &TwoLevelParams,
    laser_tau: f64,
    coherent_tau: f64,
    setup_visibility: f64,
    delays: &[f64],
) -> Result<CorrelationTrace> {
    if !(setup_visibility > 0.0 && setup_visibility <= 1.0) {
        return Err(Error::invalid("setup_visibility", "must lie in (0, 1]"));
    }
    if !(coherent_tau > 0.0) || !coherent_tau.is_finite() {
        return Err(Error::invalid("coherent_tau", "must be positive"));
    }
    if !(laser_tau > 0.0) {
        return Err(Error::invalid("laser_tau", "must be positive"));
    }
    if coherent_tau > laser_tau {
        return Err(Error::invalid(
            "coherent_tau",
            format!("{coherent_tau:e} s exceeds the laser coherence time {laser_tau:e} s"),
        ));
    }
    let values = visibility_unchecked(params, coherent_tau, setup_visibility, delays)?;
    Ok(CorrelationTrace::new(delays.to_vec(), values, CorrelationKind::G1Total))
}

/// The visibility model without the range checks on its instrument
/// parameters, for use inside fits.
pub(crate) fn visibility_unchecked(
    params: &TwoLevelParams,
    coherent_tau: f64,
    setup_visibility: f64,
    delays: &[f64],
) -> Result<Vec<f64>> {
    let f = coherent_fraction(params)?.value;
    let c = mollow_coefficients(params)?;
    let norm = 0.5 + c.n_coef;
    Ok(delays
        .iter()
        .map(|&t| {
            let t = t.abs();
            let inc = if norm > 1e-14 {
                c.g1_incoherent_raw(t) / norm
            } else {
                0.0
            };
            setup_visibility * (f * (-t / (2.0 * coherent_tau)).exp() + (1.0 - f) * inc).abs()
        })
        .collect())
}
