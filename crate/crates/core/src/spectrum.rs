//! Spectral traces and their analytic line decomposition.
//!
//! Every closed-form resonance-fluorescence spectrum is a finite sum of
//! complex Lorentzian poles, each contributing
//!
//! ```text
//! S(ω) = (1/π) Re[ amp / (width − i(ω − center))^order ]
//! ```
//!
//! on the angular axis. Convolving any such term with a Lorentzian of half
//! width `h` just replaces `width` by `width + h`, which is how instrument
//! broadening is applied without numerical quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{hz_to_angular, lorentzian_field_decay_rate};

/// One pole of a rational spectral density. Angular units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub center: f64,
    pub width: f64,
    pub amp: Complex64,
    pub order: u8,
}

impl Line {
    /// Absorptive Lorentzian of unit-normalized shape carrying `weight`.
    pub fn lorentzian(center: f64, hwhm: f64, weight: f64) -> Self {
        Line {
            center,
            width: hwhm,
            amp: Complex64::new(weight, 0.0),
            order: 1,
        }
    }

    /// Density per unit angular frequency.
    pub fn density(&self, omega: f64) -> f64 {
        let z = Complex64::new(self.width, -(omega - self.center));
        let zp = match self.order {
            1 => z,
            2 => z * z,
            n => z.powi(n as i32),
        };
        (self.amp / zp).re / PI
    }

    /// Integral of the density over the whole axis.
    pub fn area(&self) -> f64 {
        if self.order == 1 {
            self.amp.re
        } else {
            0.0
        }
    }

    pub fn broadened(&self, extra_hwhm: f64) -> Self {
        Line {
            width: self.width + extra_hwhm,
            ..*self
        }
    }
}

/// The coherently scattered part: a delta (`hwhm = 0`) or a Lorentzian
/// inherited from the laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLine {
    pub weight: f64,
    pub hwhm: f64,
}

impl CoherentLine {
    pub fn density(&self, omega: f64) -> f64 {
        if self.hwhm > 0.0 {
            self.weight * self.hwhm / (PI * (omega * omega + self.hwhm * self.hwhm))
        } else {
            0.0
        }
    }
}

/// Analytic spectrum: incoherent poles plus a coherent line, in angular units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    pub incoherent: Vec<Line>,
    pub coherent: CoherentLine,
}

impl LineSpectrum {
    pub fn incoherent_weight(&self) -> f64 {
        self.incoherent.iter().map(Line::area).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.incoherent_weight() + self.coherent.weight
    }

    pub fn incoherent_density(&self, omega: f64) -> f64 {
        self.incoherent.iter().map(|l| l.density(omega)).sum()
    }

    /// Convolution with a unit-area Lorentzian of the given FWHM (Hz).
    pub fn convolve_lorentzian(&self, fwhm_hz: f64) -> Self {
        let h = lorentzian_field_decay_rate(fwhm_hz);
        LineSpectrum {
            incoherent: self.incoherent.iter().map(|l| l.broadened(h)).collect(),
            coherent: CoherentLine {
                weight: self.coherent.weight,
                hwhm: self.coherent.hwhm + h,
            },
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        LineSpectrum {
            incoherent: self.incoherent.iter().map(|l| Line { amp: l.amp * k, ..*l }).collect(),
            coherent: CoherentLine {
                weight: self.coherent.weight * k,
                hwhm: self.coherent.hwhm,
            },
        }
    }

    /// Samples the spectrum on a linear-frequency grid (Hz); densities are per Hz.
    pub fn sample(&self, grid_hz: &[f64]) -> Result<SpectrumTrace> {
        check_grid(grid_hz)?;
        let jac = 2.0 * PI;
        let incoherent: Vec<f64> = grid_hz
            .iter()
            .map(|&f| jac * self.incoherent_density(hz_to_angular(f)))
            .collect();
        let coherent = if self.coherent.hwhm > 0.0 {
            CoherentPart::Density(
                grid_hz
                    .iter()
                    .map(|&f| jac * self.coherent.density(hz_to_angular(f)))
                    .collect(),
            )
        } else {
            CoherentPart::Delta {
                weight: self.coherent.weight,
            }
        };
        Ok(SpectrumTrace::from_parts(
            grid_hz.to_vec(),
            coherent,
            incoherent,
            Some(self.clone()),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherentPart {
    /// Zero-width coherent line at zero detuning; only its weight is recorded.
    Delta {
        weight: f64,
    },
    Density(Vec<f64>),
}

/// Spectral densities on a strictly increasing linear-frequency grid (Hz).
///
/// `total` is `incoherent` plus the coherent density; a delta-like coherent
/// part is not included in `total` and is reported through its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub detunings: Vec<f64>,
    pub coherent: CoherentPart,
    pub incoherent: Vec<f64>,
    pub total: Vec<f64>,
    /// Analytic form the samples came from, when known.
    #[serde(skip)]
    pub model: Option<LineSpectrum>,
}

impl SpectrumTrace {
    pub fn from_parts(
        detunings: Vec<f64>,
        coherent: CoherentPart,
        incoherent: Vec<f64>,
        model: Option<LineSpectrum>,
    ) -> Self {
        let total = match &coherent {
            CoherentPart::Delta { .. } => incoherent.clone(),
            CoherentPart::Density(c) => c.iter().zip(&incoherent).map(|(a, b)| a + b).collect(),
        };
        SpectrumTrace {
            detunings,
            coherent,
            incoherent,
            total,
            model,
        }
    }

    pub fn coherent_density(&self) -> Vec<f64> {
        match &self.coherent {
            CoherentPart::Delta { .. } => vec![0.0; self.detunings.len()],
            CoherentPart::Density(c) => c.clone(),
        }
    }

    pub fn delta_weight(&self) -> f64 {
        match self.coherent {
            CoherentPart::Delta { weight } => weight,
            CoherentPart::Density(_) => 0.0,
        }
    }

    /// Trapezoidal integral of `total` plus any delta weight.
    pub fn integrated_total(&self) -> f64 {
        trapezoid(&self.detunings, &self.total) + self.delta_weight()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("frequency grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("grid", "non-finite value"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    Ok(())
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}
