//! Scanning Fabry–Perot spectroscopy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::mollow::line_spectrum;
use crate::oracle::spectrum_oracle_broadened;
use crate::params::TwoLevelParams;
use crate::spectrum::{check_grid, CoherentPart, SpectrumTrace};

/// Numeric convolution needs at least this many samples per kernel FWHM.
pub const SAMPLES_PER_FWHM: f64 = 4.0;

/// Convolves a spectrum with a unit-area Lorentzian of the given FWHM (Hz).
///
/// Traces that carry their analytic line form are broadened exactly; others
/// are convolved numerically on their own grid.
pub fn convolve_lorentzian(trace: &SpectrumTrace, fwhm: f64) -> Result<SpectrumTrace> {
    check_fwhm(fwhm)?;
    match &trace.model {
        Some(model) => model.convolve_lorentzian(fwhm).sample(&trace.detunings),
        None => convolve_lorentzian_numeric(trace, fwhm),
    }
}

/// Grid-based convolution. A delta coherent part is convolved exactly; all
/// sampled densities use trapezoidal quadrature over the grid, so content
/// beyond the grid ends is lost.
pub fn convolve_lorentzian_numeric(trace: &SpectrumTrace, fwhm: f64) -> Result<SpectrumTrace> {
    check_fwhm(fwhm)?;
    let x = &trace.detunings;
    check_grid(x)?;
    let spacing = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let limit = fwhm / SAMPLES_PER_FWHM;
    if spacing > limit {
        return Err(Error::Resolution {
            spacing,
            limit,
            width: fwhm,
        });
    }
    let h = 0.5 * fwhm;
    let kernel = |d: f64| h / (PI * (d * d + h * h));
    let conv = |y: &[f64]| -> Vec<f64> {
        x.iter()
            .map(|&xi| {
                let mut acc = 0.0;
                for j in 0..x.len() - 1 {
                    let a = y[j] * kernel(xi - x[j]);
                    let b = y[j + 1] * kernel(xi - x[j + 1]);
                    acc += 0.5 * (x[j + 1] - x[j]) * (a + b);
                }
                acc
            })
            .collect()
    };
    let incoherent = conv(&trace.incoherent);
    let coherent = match &trace.coherent {
        CoherentPart::Delta { weight } => CoherentPart::Density(x.iter().map(|&f| weight * kernel(f)).collect()),
        CoherentPart::Density(c) => CoherentPart::Density(conv(c)),
    };
    Ok(SpectrumTrace::from_parts(x.clone(), coherent, incoherent, None))
}

fn check_fwhm(fwhm: f64) -> Result<()> {
    if fwhm > 0.0 && fwhm.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("fwhm", format!("must be positive, got {fwhm}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanComponents {
    pub coherent: Vec<f64>,
    pub incoherent: Vec<f64>,
    pub leakage: Vec<f64>,
    pub dark: Vec<f64>,
}

/// Count rate (1/s) against cavity detuning (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTrace {
    pub scan_axis: Vec<f64>,
    pub counts: Vec<f64>,
    pub components: Option<ScanComponents>,
}

/// Expected detector count rate while the cavity scans across the emission.
///
/// The cavity transmits `1` on its own resonance, so a line much narrower
/// than the cavity is recorded at its full collected rate times
/// `π·(fwhm/2)` per unit of spectral density. Residual laser light (rate
/// `leakage_per_power · power_ratio` without the cavity) appears as the laser
/// line seen through the cavity, and dark counts as a flat floor.
pub fn fp_scan(
    params: &TwoLevelParams,
    laser_linewidth: f64,
    cavity_fwhm: f64,
    scan_grid: &[f64],
    background: &BackgroundModel,
    power_ratio: f64,
) -> Result<ScanTrace> {
    check_fwhm(cavity_fwhm)?;
    check_grid(scan_grid)?;
    background.validate()?;
    if !(laser_linewidth >= 0.0) {
        return Err(Error::invalid("laser_linewidth", "must be >= 0"));
    }
    if !(power_ratio >= 0.0) {
        return Err(Error::invalid("power_ratio", "must be >= 0"));
    }
    let spectrum = if params.is_resonant() {
        line_spectrum(params, laser_linewidth)?
            .convolve_lorentzian(cavity_fwhm)
            .sample(scan_grid)?
    } else {
        spectrum_oracle_broadened(params, laser_linewidth, cavity_fwhm, scan_grid)?
    };
    let hc = 0.5 * cavity_fwhm;
    let k = background.collection_efficiency * PI * hc;
    let coherent: Vec<f64> = spectrum.coherent_density().iter().map(|v| k * v).collect();
    let incoherent: Vec<f64> = spectrum.incoherent.iter().map(|v| k * v).collect();
    let hl = hc + 0.5 * laser_linewidth;
    let leak_peak = background.leakage_per_power * power_ratio * hc / hl;
    let leakage: Vec<f64> = scan_grid
        .iter()
        .map(|&d| leak_peak * hl * hl / (d * d + hl * hl))
        .collect();
    let dark = vec![background.dark_rate; scan_grid.len()];
    let counts = (0..scan_grid.len())
        .map(|i| coherent[i] + incoherent[i] + leakage[i] + dark[i])
        .collect();
    Ok(ScanTrace {
        scan_axis: scan_grid.to_vec(),
        counts,
        components: Some(ScanComponents {
            coherent,
            incoherent,
            leakage,
            dark,
        }),
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::correlation::linspace;
    use crate::mollow::{spectrum_incoherent_closed, spectrum_total};
    use crate::spectrum::{trapezoid, CoherentLine, Line, LineSpectrum};
    use crate::units::hz_to_angular;
    use approx::assert_relative_eq;

    const T1: f64 = 760e-12;

    fn half_max_width(x: &[f64], y: &[f64]) -> f64 {
        let peak = y.iter().cloned().fold(f64::MIN, f64::max);
        let above: Vec<f64> = x
            .iter()
            .zip(y)
            .filter(|(_, &v)| v >= 0.5 * peak)
            .map(|(a, _)| *a)
            .collect();
        above[above.len() - 1] - above[0]
    }

    #[test]
    fn lorentzian_widths_add() {
        let line = LineSpectrum {
            incoherent: vec![Line::lorentzian(0.0, hz_to_angular(3.5e6), 1.0)],
            coherent: CoherentLine { weight: 0.0, hwhm: 0.0 },
        };
        let grid = linspace(-200e6, 200e6, 400_001);
        let t = line.sample(&grid).unwrap();
        let c = convolve_lorentzian(&t, 29e6).unwrap();
        assert_relative_eq!(half_max_width(&grid, &c.incoherent), 36e6, max_relative = 1e-4);
    }

    #[test]
    fn delta_becomes_cavity_lorentzian() {
        let p = TwoLevelParams::radiative(T1, 0.22).unwrap();
        let grid = linspace(-200e6, 200e6, 40_001);
        let s = spectrum_incoherent_closed(&p, &grid).unwrap();
        let w = s.delta_weight();
        for c in [
            convolve_lorentzian(&s, 29e6).unwrap(),
            convolve_lorentzian_numeric(&s, 29e6).unwrap(),
        ] {
            let coh = c.coherent_density();
            assert_relative_eq!(half_max_width(&grid, &coh), 29e6, max_relative = 1e-3);
            assert_relative_eq!(coh[20_000], w / (PI * 14.5e6), max_relative = 1e-12);
        }
    }

    #[test]
    fn analytic_and_numeric_paths_agree() {
        let p = TwoLevelParams::new(T1, 1.5 * T1, 0.6 / T1).unwrap();
        // 0.5 MHz spacing resolves the 3 MHz laser line as well as the cavity
        let grid = linspace(-4e9, 4e9, 16_001);
        let s = spectrum_total(&p, 3e6, &grid).unwrap();
        let a = convolve_lorentzian(&s, 29e6).unwrap();
        let mut stripped = s.clone();
        stripped.model = None;
        let n = convolve_lorentzian(&stripped, 29e6).unwrap();
        let peak = a.total.iter().cloned().fold(0.0, f64::max);
        // compare away from the ends, where the numeric path loses the tails
        for i in 6000..10_000 {
            assert!((a.total[i] - n.total[i]).abs() / peak < 1e-4, "at {}", grid[i]);
        }
    }

    #[test]
    fn coarse_grid_is_refused() {
        let p = TwoLevelParams::radiative(T1, 0.6).unwrap();
        let grid = linspace(-1e9, 1e9, 101);
        let mut s = spectrum_total(&p, 3e6, &grid).unwrap();
        s.model = None;
        assert!(matches!(convolve_lorentzian(&s, 29e6), Err(Error::Resolution { .. })));
        assert!(convolve_lorentzian(&s, 0.0).is_err());
    }

    #[test]
    fn convolution_is_associative() {
        let p = TwoLevelParams::radiative(T1, 1.5).unwrap();
        let grid = linspace(-1e9, 1e9, 201);
        let s = spectrum_total(&p, 3e6, &grid).unwrap();
        let ab = convolve_lorentzian(&convolve_lorentzian(&s, 10e6).unwrap(), 19e6).unwrap();
        let c = convolve_lorentzian(&s, 29e6).unwrap();
        for i in 0..grid.len() {
            assert_relative_eq!(ab.total[i], c.total[i], max_relative = 1e-6);
        }
    }

    #[test]
    fn scan_area_matches_collected_rate() {
        let p = TwoLevelParams::radiative(T1, 0.6).unwrap();
        let bg = BackgroundModel::new(0.0, 0.0, 0.01).unwrap();
        let grid = linspace(-40e9, 40e9, 400_001);
        let scan = fp_scan(&p, 3e6, 29e6, &grid, &bg, 0.5).unwrap();
        let rate = crate::mollow::emission_rate(&p).unwrap();
        let area = trapezoid(&grid, &scan.counts);
        assert_relative_eq!(area / (PI * 14.5e6), 0.01 * rate, max_relative = 2e-3);
    }

    #[test]
    fn background_only_scan() {
        // emitter gate-detuned by 35 GHz
        let p = TwoLevelParams::radiative(T1, 1.5)
            .unwrap()
            .with_detuning(hz_to_angular(35e9))
            .unwrap();
        let bg = BackgroundModel::new(1000.0, 150.0, 0.004).unwrap();
        let grid = linspace(-500e6, 500e6, 1001);
        let scan = fp_scan(&p, 3e6, 29e6, &grid, &bg, 4.5).unwrap();
        let comp = scan.components.as_ref().unwrap();
        assert_relative_eq!(comp.leakage[500], 4500.0 * 14.5 / 16.0, max_relative = 1e-12);
        assert_relative_eq!(scan.counts[0], 150.0 + comp.leakage[0], max_relative = 1e-3);
        // off-resonant Rayleigh scattering is small but not zero
        assert!(comp.incoherent[500] + comp.coherent[500] < 0.05 * comp.leakage[500]);
        assert_relative_eq!(half_max_width(&grid, &comp.leakage), 32e6, max_relative = 0.05);
    }
}
