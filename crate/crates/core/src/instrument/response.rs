//! Instrument response functions used as convolution kernels.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FWHM of a unit-σ Gaussian.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// A unit-area response on some axis (seconds for timing responses, Hz for
/// spectral ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstrumentResponse {
    /// Ideal response.
    Delta,
    Lorentzian {
        fwhm: f64,
    },
    Gaussian {
        fwhm: f64,
    },
    /// Sampled response, recentred on its centroid and normalized to unit area
    /// on construction.
    Tabulated {
        x: Vec<f64>,
        w: Vec<f64>,
    },
}

impl InstrumentResponse {
    pub fn lorentzian(fwhm: f64) -> Result<Self> {
        let r = InstrumentResponse::Lorentzian { fwhm };
        r.validate()?;
        Ok(r)
    }

    pub fn gaussian(fwhm: f64) -> Result<Self> {
        let r = InstrumentResponse::Gaussian { fwhm };
        r.validate()?;
        Ok(r)
    }

    /// Builds a tabulated response from arbitrary-spacing samples.
    pub fn tabulated(x: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if x.len() != w.len() {
            return Err(Error::invalid("tabulated", "axis and weights differ in length"));
        }
        if x.len() < 2 {
            return Err(Error::Empty("tabulated response needs at least two samples"));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("tabulated", "axis must be strictly increasing"));
        }
        if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("tabulated", "weights must be finite and nonnegative"));
        }
        let area = crate::spectrum::trapezoid(&x, &w);
        if !(area > 0.0) {
            return Err(Error::invalid("tabulated", "weights have zero area"));
        }
        let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        let centroid = crate::spectrum::trapezoid(&x, &xw) / area;
        Ok(InstrumentResponse::Tabulated {
            x: x.iter().map(|v| v - centroid).collect(),
            w: w.iter().map(|v| v / area).collect(),
        })
    }

    /// Parses two-column delimited text (`time_seconds, weight`). Commas,
    /// tabs or spaces separate columns; `#` starts a comment.
    pub fn parse_tabulated(text: &str) -> Result<Self> {
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 2 columns, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("`{s}`: {e}"),
                })
            };
            rows.push((parse(fields[0])?, parse(fields[1])?));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, w) = rows.into_iter().unzip();
        Self::tabulated(x, w)
    }

    pub fn load_tabulated(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tabulated(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InstrumentResponse::Delta => Ok(()),
            InstrumentResponse::Lorentzian { fwhm } | InstrumentResponse::Gaussian { fwhm } => {
                if *fwhm > 0.0 && fwhm.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("fwhm", format!("must be positive, got {fwhm}")))
                }
            }
            InstrumentResponse::Tabulated { x, w } => {
                if x.len() != w.len() || x.len() < 2 {
                    return Err(Error::invalid("tabulated", "malformed samples"));
                }
                Ok(())
            }
        }
    }

    /// Full width at half maximum; zero for a delta. For tabulated data this
    /// is measured on the samples.
    pub fn fwhm(&self) -> f64 {
        match self {
            InstrumentResponse::Delta => 0.0,
            InstrumentResponse::Lorentzian { fwhm } | InstrumentResponse::Gaussian { fwhm } => *fwhm,
            InstrumentResponse::Tabulated { x, w } => {
                let peak = w.iter().cloned().fold(0.0, f64::max);
                let above: Vec<f64> = x
                    .iter()
                    .zip(w)
                    .filter(|(_, &v)| v >= 0.5 * peak)
                    .map(|(a, _)| *a)
                    .collect();
                match (above.first(), above.last()) {
                    (Some(a), Some(b)) => b - a,
                    _ => 0.0,
                }
            }
        }
    }

    /// Half-width beyond which the response is treated as zero.
    pub fn support(&self) -> f64 {
        match self {
            InstrumentResponse::Delta => 0.0,
            // the truncated tails hold about 0.3% of the area
            InstrumentResponse::Lorentzian { fwhm } => 100.0 * fwhm,
            InstrumentResponse::Gaussian { fwhm } => 6.0 * fwhm / GAUSSIAN_FWHM_PER_SIGMA,
            InstrumentResponse::Tabulated { x, .. } => x[0].abs().max(x[x.len() - 1].abs()),
        }
    }

    /// Unit-area density at `x`. Infinite at the origin for a delta.
    pub fn density(&self, at: f64) -> f64 {
        match self {
            InstrumentResponse::Delta => {
                if at == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            InstrumentResponse::Lorentzian { fwhm } => {
                let h = 0.5 * fwhm;
                h / (PI * (at * at + h * h))
            }
            InstrumentResponse::Gaussian { fwhm } => {
                let s = fwhm / GAUSSIAN_FWHM_PER_SIGMA;
                (-0.5 * (at / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
            }
            InstrumentResponse::Tabulated { x, w } => {
                if at < x[0] || at > x[x.len() - 1] {
                    0.0
                } else {
                    crate::correlation::interp_linear(x, w, at)
                }
            }
        }
    }

    /// Weight of the response falling in `[lo, hi]`.
    pub fn cell_weight(&self, lo: f64, hi: f64) -> f64 {
        match self {
            InstrumentResponse::Delta => {
                if lo <= 0.0 && 0.0 < hi {
                    1.0
                } else {
                    0.0
                }
            }
            InstrumentResponse::Lorentzian { fwhm } => {
                let h = 0.5 * fwhm;
                ((hi / h).atan() - (lo / h).atan()) / PI
            }
            InstrumentResponse::Gaussian { fwhm } => {
                let s = fwhm / GAUSSIAN_FWHM_PER_SIGMA * std::f64::consts::SQRT_2;
                0.5 * (libm::erf(hi / s) - libm::erf(lo / s))
            }
            InstrumentResponse::Tabulated { .. } => {
                // Simpson on the piecewise-linear density
                let m = 0.5 * (lo + hi);
                (hi - lo) * (self.density(lo) + 4.0 * self.density(m) + self.density(hi)) / 6.0
            }
        }
    }
}

/// Gaussian FWHM from σ.
pub fn gaussian_fwhm(sigma: f64) -> f64 {
    sigma * 2.0 * (2.0 * LN_2).sqrt()
}
