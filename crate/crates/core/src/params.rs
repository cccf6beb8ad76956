use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed on `t2 <= 2 t1` so that `t2 = 2.0 * t1` computed in
/// floating point is always accepted.
const T2_BOUND_SLACK: f64 = 1e-12;

/// Emitter and drive: lifetime `t1` (s), total coherence time `t2` (s), Rabi
/// frequency `rabi` (rad/s) and laser detuning `detuning` (rad/s, laser minus
/// transition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub t1: f64,
    pub t2: f64,
    pub rabi: f64,
    #[serde(default)]
    pub detuning: f64,
}

impl TwoLevelParams {
    pub fn new(t1: f64, t2: f64, rabi: f64) -> Result<Self> {
        let p = TwoLevelParams {
            t1,
            t2,
            rabi,
            detuning: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Radiatively limited emitter (`t2 = 2 t1`) driven at `rabi_over_gamma · Γ`.
    pub fn radiative(t1: f64, rabi_over_gamma: f64) -> Result<Self> {
        Self::new(t1, 2.0 * t1, rabi_over_gamma / t1)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Result<Self> {
        self.detuning = detuning;
        self.validate()?;
        Ok(self)
    }

    pub fn with_t2(mut self, t2: f64) -> Result<Self> {
        self.t2 = t2;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rabi(mut self, rabi: f64) -> Result<Self> {
        self.rabi = rabi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0) || !self.t1.is_finite() {
            return Err(Error::invalid("t1", format!("must be positive, got {}", self.t1)));
        }
        if !(self.t2 > 0.0) || !self.t2.is_finite() {
            return Err(Error::invalid("t2", format!("must be positive, got {}", self.t2)));
        }
        if self.t2 > 2.0 * self.t1 * (1.0 + T2_BOUND_SLACK) {
            return Err(Error::invalid(
                "t2",
                format!("t2 = {:e} exceeds 2·t1 = {:e}", self.t2, 2.0 * self.t1),
            ));
        }
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::invalid("rabi", format!("must be >= 0, got {}", self.rabi)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }

    /// Spontaneous emission rate Γ = 1/T₁.
    #[inline]
    pub fn gamma(&self) -> f64 {
        1.0 / self.t1
    }

    /// Total coherence decay rate 1/T₂.
    #[inline]
    pub fn coherence_rate(&self) -> f64 {
        1.0 / self.t2
    }

    /// Pure dephasing rate 1/T₂ − 1/(2T₁), clamped at zero.
    #[inline]
    pub fn pure_dephasing(&self) -> f64 {
        (1.0 / self.t2 - 0.5 / self.t1).max(0.0)
    }

    /// Saturation parameter Ω²T₁T₂ (on resonance).
    #[inline]
    pub fn saturation(&self) -> f64 {
        self.rabi * self.rabi * self.t1 * self.t2
    }

    #[inline]
    pub fn is_resonant(&self) -> bool {
        self.detuning == 0.0
    }

    pub(crate) fn require_resonant(&self, what: &str) -> Result<()> {
        if self.is_resonant() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} is closed-form only on resonance; use the Bloch-equation oracle for detuning {:e} rad/s",
                self.detuning
            )))
        }
    }
}

/// Rabi frequency from the excitation power, `Ω = sqrt((P/P_sat) / (T₁ T₂,sat))`.
pub fn rabi_from_power(power_ratio: f64, t1: f64, t2_sat: f64) -> Result<f64> {
    if !(power_ratio >= 0.0) || !power_ratio.is_finite() {
        return Err(Error::invalid("power_ratio", "must be >= 0"));
    }
    if !(t1 > 0.0) || !(t2_sat > 0.0) {
        return Err(Error::invalid("t1", "lifetimes must be positive"));
    }
    Ok((power_ratio / (t1 * t2_sat)).sqrt())
}

/// Inverse of [`rabi_from_power`].
pub fn power_from_rabi(rabi: f64, t1: f64, t2_sat: f64) -> f64 {
    rabi * rabi * t1 * t2_sat
}
