//! Unit handling at the API boundary.
//!
//! Everything inside the crate works with angular rates (rad/s). Linear
//! frequencies (Hz) appear only on spectral grids and instrument widths, and
//! are converted here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NS: f64 = 1e-9;
pub const PS: f64 = 1e-12;
pub const MHZ: f64 = 1e6;
pub const GHZ: f64 = 1e9;

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Direction of a coherence-time / linewidth conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conversion {
    /// Coherence time (s) to Lorentzian FWHM (Hz).
    TimeToLinewidth,
    /// Lorentzian FWHM (Hz) to coherence time (s).
    LinewidthToTime,
}

/// Converts between a field coherence time and the FWHM of the matching
/// Lorentzian line, `fwhm = 1 / (2π τc)`.
///
/// The field correlation of such a line decays as `exp(-|τ| / (2 τc))`.
pub fn coherence_linewidth_convert(value: f64, direction: Conversion) -> Result<f64> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::invalid("value", "must be positive and finite"));
    }
    // The map is an involution.
    let _ = direction;
    Ok(1.0 / (2.0 * PI * value))
}

/// Field-correlation decay rate (1/s) of a Lorentzian line with the given FWHM (Hz).
#[inline]
pub fn lorentzian_field_decay_rate(fwhm_hz: f64) -> f64 {
    PI * fwhm_hz
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quoted_pairs() {
        let w22 = coherence_linewidth_convert(22.0 * NS, Conversion::TimeToLinewidth).unwrap();
        assert_relative_eq!(w22 / MHZ, 7.2343, epsilon = 1e-3);
        let w53 = coherence_linewidth_convert(53.0 * NS, Conversion::TimeToLinewidth).unwrap();
        assert_relative_eq!(w53 / MHZ, 3.0029, epsilon = 1e-3);
    }

    #[test]
    fn unit_case() {
        let t = coherence_linewidth_convert(1.0 / (2.0 * PI), Conversion::LinewidthToTime).unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(coherence_linewidth_convert(0.0, Conversion::TimeToLinewidth).is_err());
        assert!(coherence_linewidth_convert(-1.0, Conversion::LinewidthToTime).is_err());
        assert!(coherence_linewidth_convert(f64::NAN, Conversion::LinewidthToTime).is_err());
    }

    #[test]
    fn lorentzian_decay_matches_convention() {
        // exp(-π Δν τ) must equal exp(-τ / (2 τc)) when Δν = 1/(2π τc).
        let tau_c = 22.0 * NS;
        let fwhm = coherence_linewidth_convert(tau_c, Conversion::TimeToLinewidth).unwrap();
        assert_relative_eq!(
            lorentzian_field_decay_rate(fwhm),
            1.0 / (2.0 * tau_c),
            max_relative = 1e-14
        );
    }

    proptest::proptest! {
        #[test]
        fn round_trip(x in 1e-15f64..1e12) {
            let y = coherence_linewidth_convert(x, Conversion::TimeToLinewidth).unwrap();
            let back = coherence_linewidth_convert(y, Conversion::LinewidthToTime).unwrap();
            proptest::prop_assert!(((back - x) / x).abs() < 4.0 * f64::EPSILON);
        }
    }
}
