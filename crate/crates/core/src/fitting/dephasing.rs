//! Drive dependence of the extracted pure-dephasing rate.

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use super::model::Param;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingLaw {
    Linear,
    Quadratic,
    /// Neither law is favoured, e.g. when there is no dephasing at all.
    Indeterminate,
}

/// Through-origin regression `γ_d = slope · xᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawFit {
    pub slope: f64,
    /// Sum of squared residuals (1/s²).
    pub ssr: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingScan {
    pub rabi: Vec<f64>,
    pub dephasing_rate: Vec<f64>,
    /// `γ_d ∝ Ω`
    pub linear: LawFit,
    /// `γ_d ∝ Ω²`
    pub quadratic: LawFit,
    pub preferred: DephasingLaw,
}

/// A law is preferred when its residual sum is below this fraction of the other's.
const PREFERENCE_RATIO: f64 = 0.5;

fn through_origin(x: &[f64], y: &[f64]) -> LawFit {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    LawFit {
        slope,
        ssr,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
    }
}

/// Regresses `γ_d = 1/T₂ − 1/(2T₁)` from each fit against `Ω` and against
/// `Ω²`. Each entry pairs the Rabi frequency with a fit that determined
/// `T₁` and `T₂`.
pub fn dephasing_power_scan(fits: &[(f64, FitResult)]) -> Result<DephasingScan> {
    if fits.len() < 3 {
        return Err(Error::invalid("fits", "need at least three Rabi frequencies"));
    }
    let mut rabi = Vec::with_capacity(fits.len());
    let mut rate = Vec::with_capacity(fits.len());
    for (om, r) in fits {
        let t1 = r.estimate(Param::T1).ok_or(Error::Fit("fit lacks t1".into()))?;
        let t2 = r.estimate(Param::T2).ok_or(Error::Fit("fit lacks t2".into()))?;
        rabi.push(*om);
        rate.push(1.0 / t2 - 0.5 / t1);
    }
    let mut distinct = rabi.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid("fits", "need at least three distinct Rabi frequencies"));
    }
    let sq: Vec<f64> = rabi.iter().map(|v| v * v).collect();
    let linear = through_origin(&rabi, &rate);
    let quadratic = through_origin(&sq, &rate);
    let scale: f64 =
        rate.iter().map(|v| v * v).sum::<f64>() + (1e-6 / fits[0].1.estimate(Param::T1).unwrap_or(1.0)).powi(2);
    let preferred = if linear.ssr.max(quadratic.ssr) <= 1e-12 * scale {
        DephasingLaw::Indeterminate
    } else if linear.ssr < PREFERENCE_RATIO * quadratic.ssr {
        DephasingLaw::Linear
    } else if quadratic.ssr < PREFERENCE_RATIO * linear.ssr {
        DephasingLaw::Quadratic
    } else {
        DephasingLaw::Indeterminate
    };
    Ok(DephasingScan {
        rabi,
        dephasing_rate: rate,
        linear,
        quadratic,
        preferred,
    })
}
