//! Laser leakage, dark counts and the resulting signal-to-background ratio.

use serde::{Deserialize, Serialize};

use crate::bloch::steady_state;
use crate::error::{Error, Result};
use crate::params::{rabi_from_power, TwoLevelParams};

/// Collected resonance-fluorescence rate at saturation used for calibration (1/s).
pub const SIGNAL_AT_SATURATION: f64 = 1.25e6;
/// Signal-to-background ratio at saturation used for calibration.
pub const SBR_AT_SATURATION: f64 = 1050.0;
/// Default detector dark-count rate (1/s).
pub const DEFAULT_DARK_RATE: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    /// Residual laser counts per second per unit `P/P_sat`.
    pub leakage_per_power: f64,
    pub dark_rate: f64,
    /// Detected fraction of emitted photons.
    pub collection_efficiency: f64,
}

/// Outcome of anchoring a [`BackgroundModel`] to a measured signal and SBR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: BackgroundModel,
    pub background_at_saturation: f64,
    /// Background share of all detected counts at saturation.
    pub background_fraction: f64,
    /// `P/P_sat` at which leakage equals the dark rate.
    pub leakage_crossover: f64,
}

impl BackgroundModel {
    pub fn new(leakage_per_power: f64, dark_rate: f64, collection_efficiency: f64) -> Result<Self> {
        let m = BackgroundModel {
            leakage_per_power,
            dark_rate,
            collection_efficiency,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.leakage_per_power >= 0.0) || !self.leakage_per_power.is_finite() {
            return Err(Error::invalid("leakage_per_power", "must be >= 0"));
        }
        if !(self.dark_rate >= 0.0) || !self.dark_rate.is_finite() {
            return Err(Error::invalid("dark_rate", "must be >= 0"));
        }
        if !(self.collection_efficiency >= 0.0 && self.collection_efficiency <= 1.0) {
            return Err(Error::invalid("collection_efficiency", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Off-resonance count rate at `P/P_sat = power_ratio`.
    pub fn off_resonance(&self, power_ratio: f64) -> f64 {
        self.leakage_per_power * power_ratio + self.dark_rate
    }

    /// Fixes collection efficiency and leakage from the collected signal and
    /// the SBR at saturation, for a given dark rate. `t1` and `t2` come from
    /// `params_at_sat`; its Rabi frequency is ignored.
    pub fn calibrate(
        params_at_sat: &TwoLevelParams,
        signal_sat: f64,
        sbr_sat: f64,
        dark_rate: f64,
    ) -> Result<Calibration> {
        if !(signal_sat > 0.0) || !(sbr_sat > 0.0) {
            return Err(Error::invalid("calibration", "signal and SBR must be positive"));
        }
        let emitted = emitted_rate(params_at_sat, 1.0)?;
        let collection_efficiency = signal_sat / emitted;
        let background = signal_sat / sbr_sat;
        let leakage = background - dark_rate;
        if leakage < 0.0 {
            return Err(Error::invalid(
                "dark_rate",
                format!("dark rate {dark_rate} exceeds the calibrated background {background:.1}"),
            ));
        }
        let model = BackgroundModel::new(leakage, dark_rate, collection_efficiency)?;
        Ok(Calibration {
            model,
            background_at_saturation: background,
            background_fraction: background / (signal_sat + background),
            leakage_crossover: if leakage > 0.0 {
                dark_rate / leakage
            } else {
                f64::INFINITY
            },
        })
    }
}

fn emitted_rate(params_at_sat: &TwoLevelParams, power_ratio: f64) -> Result<f64> {
    let rabi = rabi_from_power(power_ratio, params_at_sat.t1, params_at_sat.t2)?;
    let p = TwoLevelParams::new(params_at_sat.t1, params_at_sat.t2, rabi)?;
    Ok(p.gamma() * steady_state(&p)?.excited_population())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbrCurves {
    pub power: Vec<f64>,
    /// Collected resonance fluorescence (1/s).
    pub signal: Vec<f64>,
    /// Off-resonance counts (1/s).
    pub background: Vec<f64>,
    /// `signal / background`; `f64::INFINITY` where the background vanishes.
    pub sbr: Vec<f64>,
}

/// Power dependence of signal, background and their ratio, at fixed `T₂`.
pub fn sbr_curves(
    power_grid: &[f64],
    params_at_sat: &TwoLevelParams,
    background: &BackgroundModel,
) -> Result<SbrCurves> {
    background.validate()?;
    params_at_sat.validate()?;
    let mut signal = Vec::with_capacity(power_grid.len());
    let mut bg = Vec::with_capacity(power_grid.len());
    let mut sbr = Vec::with_capacity(power_grid.len());
    for &p in power_grid {
        let s = background.collection_efficiency * emitted_rate(params_at_sat, p)?;
        let b = background.off_resonance(p);
        signal.push(s);
        bg.push(b);
        sbr.push(if b > 0.0 { s / b } else { f64::INFINITY });
    }
    Ok(SbrCurves {
        power: power_grid.to_vec(),
        signal,
        background: bg,
        sbr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const T1: f64 = 760e-12;

    fn sat() -> TwoLevelParams {
        TwoLevelParams::radiative(T1, 0.0).unwrap()
    }

    fn calibrated() -> Calibration {
        BackgroundModel::calibrate(&sat(), SIGNAL_AT_SATURATION, SBR_AT_SATURATION, DEFAULT_DARK_RATE).unwrap()
    }

    #[test]
    fn calibration_reproduces_anchor() {
        let cal = calibrated();
        let c = sbr_curves(&[1.0], &sat(), &cal.model).unwrap();
        assert_relative_eq!(c.signal[0], 1.25e6, max_relative = 1e-12);
        assert_relative_eq!(c.sbr[0], 1050.0, max_relative = 1e-12);
        assert_relative_eq!(c.background[0], 1190.476, max_relative = 1e-6);
        assert_relative_eq!(cal.model.collection_efficiency, 1.25e6 * 4.0 * T1, max_relative = 1e-12);
    }

    #[test]
    fn leakage_below_dark_at_tenth_of_saturation() {
        let cal = calibrated();
        assert!(cal.model.leakage_per_power * 0.1 < cal.model.dark_rate);
        assert!(cal.leakage_crossover > 0.1);
    }

    #[test]
    fn strong_drive_kills_sbr() {
        let cal = calibrated();
        let c = sbr_curves(&[1e3, 1e6], &sat(), &cal.model).unwrap();
        assert!(c.sbr[1] < c.sbr[0] && c.sbr[1] < 1.0);
    }

    #[test]
    fn zero_background_sentinel() {
        let m = BackgroundModel::new(0.0, 0.0, 0.01).unwrap();
        let c = sbr_curves(&[0.5], &sat(), &m).unwrap();
        assert!(c.sbr[0].is_infinite());
    }

    #[test]
    fn single_interior_maximum() {
        let cal = calibrated();
        let grid: Vec<f64> = (0..400).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 399.0)).collect();
        let c = sbr_curves(&grid, &sat(), &cal.model).unwrap();
        let turns = c.sbr.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
        assert_eq!(turns, 1);
        // signal monotone and concave in P on a linear grid
        let lin: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let s = sbr_curves(&lin, &sat(), &cal.model).unwrap().signal;
        for w in s.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9 * w[1]);
        }
    }

    #[test]
    fn dark_above_background_is_refused() {
        assert!(BackgroundModel::calibrate(&sat(), 1.25e6, 1050.0, 2000.0).is_err());
        assert!(BackgroundModel::new(-1.0, 0.0, 0.5).is_err());
        assert!(BackgroundModel::new(0.0, 0.0, 1.5).is_err());
    }
}
