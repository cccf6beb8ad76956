//! WebAssembly bindings for the demo page in `www/`.
//!
//! Inputs use the page's units: times in ns, frequencies in MHz and drive
//! strength as `Ω/Γ`. Each export wraps a plain function (`mollow`, `g2`,
//! `visibility`) that also runs natively.

use resfluor::correlation::{linspace, CorrelationKind, CorrelationTrace};
use resfluor::instrument::{
    fp_scan, irf_convolve_correlation, michelson_visibility, BackgroundModel, InstrumentResponse,
};
use resfluor::mollow::{coherent_fraction, g2_closed};
use resfluor::units::{MHZ, NS};
use resfluor::{Result, TwoLevelParams};
use wasm_bindgen::prelude::*;

/// Shared abscissa with named series, handed to JavaScript.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    x: Vec<f64>,
    names: Vec<String>,
    series: Vec<Vec<f64>>,
    note: String,
}

#[wasm_bindgen]
impl Curve {
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    pub fn count(&self) -> usize {
        self.series.len()
    }

    pub fn name(&self, i: usize) -> String {
        self.names.get(i).cloned().unwrap_or_default()
    }

    pub fn values(&self, i: usize) -> Vec<f64> {
        self.series.get(i).cloned().unwrap_or_default()
    }

    /// One-line summary shown under the plot.
    pub fn note(&self) -> String {
        self.note.clone()
    }
}

impl Curve {
    fn new(x: Vec<f64>, note: String) -> Self {
        Curve {
            x,
            names: Vec::new(),
            series: Vec::new(),
            note,
        }
    }

    fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        self.names.push(name.to_string());
        self.series.push(values);
        self
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.series[i].as_slice())
    }
}

fn emitter(t1_ns: f64, t2_over_t1: f64, rabi_over_gamma: f64) -> Result<TwoLevelParams> {
    let t1 = t1_ns * NS;
    TwoLevelParams::new(t1, t2_over_t1 * t1, rabi_over_gamma / t1)
}

fn to_ns(v: &[f64]) -> Vec<f64> {
    v.iter().map(|t| t / NS).collect()
}

/// Emission seen through a scanning cavity, normalized to the peak.
pub fn mollow(
    t1_ns: f64,
    t2_over_t1: f64,
    rabi_over_gamma: f64,
    cavity_mhz: f64,
    laser_mhz: f64,
    span_mhz: f64,
) -> Result<Curve> {
    let p = emitter(t1_ns, t2_over_t1, rabi_over_gamma)?;
    // four samples per cavity width, at least 401 points
    let n = ((8.0 * span_mhz / cavity_mhz).ceil() as usize + 1).max(401);
    let grid = linspace(-span_mhz * MHZ, span_mhz * MHZ, n);
    let ideal = BackgroundModel::new(0.0, 0.0, 1.0)?;
    let scan = fp_scan(&p, laser_mhz * MHZ, cavity_mhz * MHZ, &grid, &ideal, 0.0)?;
    let peak = scan.counts.iter().cloned().fold(0.0, f64::max);
    let norm = |v: &[f64]| {
        v.iter()
            .map(|c| if peak > 0.0 { c / peak } else { 0.0 })
            .collect::<Vec<_>>()
    };
    let parts = scan.components.expect("fp_scan reports components");
    let f = coherent_fraction(&p)?;
    let note = format!(
        "coherent {:.1}%, incoherent {:.1}%, saturation s = {:.3}",
        100.0 * f.value,
        100.0 * f.incoherent(),
        p.saturation()
    );
    Ok(Curve::new(grid.iter().map(|d| d / MHZ).collect(), note)
        .with("total", norm(&scan.counts))
        .with("coherent", norm(&parts.coherent))
        .with("incoherent", norm(&parts.incoherent)))
}

/// Intensity correlation for `τ ≥ 0`, ideal and seen with a Gaussian
/// timing response of the given FWHM.
pub fn g2(t1_ns: f64, t2_over_t1: f64, rabi_over_gamma: f64, irf_fwhm_ns: f64, max_delay_ns: f64) -> Result<Curve> {
    let p = emitter(t1_ns, t2_over_t1, rabi_over_gamma)?;
    let delays = linspace(0.0, max_delay_ns * NS, 601);
    let ideal = g2_closed(&p, &delays)?;
    let observed = if irf_fwhm_ns > 0.0 {
        irf_convolve_correlation(&ideal, &InstrumentResponse::gaussian(irf_fwhm_ns * NS)?)?.observed
    } else {
        ideal.clone()
    };
    let note = format!("observed g2(0) = {:.3}", observed.values[0]);
    Ok(Curve::new(to_ns(&delays), note)
        .with("ideal", ideal.values)
        .with("with IRF", observed.values))
}

/// Michelson fringe visibility against path delay.
pub fn visibility(
    t1_ns: f64,
    t2_over_t1: f64,
    rabi_over_gamma: f64,
    coherent_tau_ns: f64,
    setup_visibility: f64,
    max_delay_ns: f64,
) -> Result<Curve> {
    let p = emitter(t1_ns, t2_over_t1, rabi_over_gamma)?;
    let delays = linspace(0.0, max_delay_ns * NS, 601);
    let tau = coherent_tau_ns * NS;
    let v = michelson_visibility(&p, tau, tau, setup_visibility, &delays)?;
    let laser = CorrelationTrace::new(
        delays.clone(),
        delays
            .iter()
            .map(|d| setup_visibility * (-d / (2.0 * tau)).exp())
            .collect(),
        CorrelationKind::G1Total,
    );
    let f = coherent_fraction(&p)?;
    let note = format!("V(0) = {:.3}, coherent fraction {:.1}%", v.values[0], 100.0 * f.value);
    Ok(Curve::new(to_ns(&delays), note)
        .with("emitter", v.values)
        .with("laser", laser.values))
}

fn js(e: resfluor::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn mollow_scan(
    t1_ns: f64,
    t2_over_t1: f64,
    rabi_over_gamma: f64,
    cavity_mhz: f64,
    laser_mhz: f64,
    span_mhz: f64,
) -> std::result::Result<Curve, JsError> {
    mollow(t1_ns, t2_over_t1, rabi_over_gamma, cavity_mhz, laser_mhz, span_mhz).map_err(js)
}

#[wasm_bindgen]
pub fn g2_curve(
    t1_ns: f64,
    t2_over_t1: f64,
    rabi_over_gamma: f64,
    irf_fwhm_ns: f64,
    max_delay_ns: f64,
) -> std::result::Result<Curve, JsError> {
    g2(t1_ns, t2_over_t1, rabi_over_gamma, irf_fwhm_ns, max_delay_ns).map_err(js)
}

#[wasm_bindgen]
pub fn visibility_curve(
    t1_ns: f64,
    t2_over_t1: f64,
    rabi_over_gamma: f64,
    coherent_tau_ns: f64,
    setup_visibility: f64,
    max_delay_ns: f64,
) -> std::result::Result<Curve, JsError> {
    visibility(
        t1_ns,
        t2_over_t1,
        rabi_over_gamma,
        coherent_tau_ns,
        setup_visibility,
        max_delay_ns,
    )
    .map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_drive_shows_side_peaks() {
        // at Ω = 1.5Γ the sidebands are only shoulders
        let c = mollow(0.76, 2.0, 4.0, 29.0, 3.0, 1500.0).unwrap();
        let y = c.series("total").unwrap();
        let maxima: Vec<f64> = (1..y.len() - 1)
            .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1])
            .map(|i| c.x[i])
            .collect();
        assert_eq!(maxima.len(), 3, "{maxima:?}");
        let rabi_mhz = 4.0 / (2.0 * std::f64::consts::PI * 0.76e-3);
        assert!((maxima[2] / rabi_mhz - 1.0).abs() < 0.05, "{maxima:?}");
        assert!((y.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn irf_fills_the_dip() {
        let c = g2(0.76, 2.0, 0.6, 0.4, 10.0).unwrap();
        assert_eq!(c.series("ideal").unwrap()[0], 0.0);
        let seen = c.series("with IRF").unwrap()[0];
        assert!(seen > 0.01 && seen < 0.5, "{seen}");
        assert!((c.series("ideal").unwrap()[600] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn visibility_starts_at_setup_value_and_tracks_laser() {
        let c = visibility(0.76, 2.0, 0.22, 22.0, 0.9, 60.0).unwrap();
        let v = c.series("emitter").unwrap();
        assert!((v[0] - 0.9).abs() < 1e-9);
        let laser = c.series("laser").unwrap();
        // beyond the transient only the coherent share remains
        let f = coherent_fraction(&emitter(0.76, 2.0, 0.22).unwrap()).unwrap().value;
        assert!((v[600] / laser[600] - f).abs() < 1e-6);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(mollow(0.76, 3.0, 0.5, 29.0, 3.0, 500.0).is_err());
        assert!(g2(0.76, 2.0, 0.0, 0.4, 10.0).is_err());
        assert!(visibility(0.76, 2.0, 0.2, 22.0, 1.5, 60.0).is_err());
    }
}
