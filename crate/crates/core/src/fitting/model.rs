//! Fit problems and the forward models they dispatch to.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bloch::steady_state;
use crate::error::{Error, Result};
use crate::instrument::michelson::visibility_unchecked;
use crate::instrument::InstrumentResponse;
use crate::mollow::{line_spectrum, mollow_coefficients};
use crate::params::{rabi_from_power, TwoLevelParams};

/// Model parameters, in SI units (s, rad/s, Hz, counts/s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    T1,
    T2,
    Rabi,
    /// Overall amplitude; the setup visibility for visibility curves and
    /// the collection efficiency for SBR curves.
    Scale,
    Offset,
    CoherentTau,
    LaserLinewidth,
    CavityFwhm,
    LeakagePerPower,
    DarkRate,
}

impl Param {
    pub const ALL: [Param; 10] = [
        Param::T1,
        Param::T2,
        Param::Rabi,
        Param::Scale,
        Param::Offset,
        Param::CoherentTau,
        Param::LaserLinewidth,
        Param::CavityFwhm,
        Param::LeakagePerPower,
        Param::DarkRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::T1 => "t1",
            Param::T2 => "t2",
            Param::Rabi => "rabi",
            Param::Scale => "scale",
            Param::Offset => "offset",
            Param::CoherentTau => "coherent_tau",
            Param::LaserLinewidth => "laser_linewidth",
            Param::CavityFwhm => "cavity_fwhm",
            Param::LeakagePerPower => "leakage_per_power",
            Param::DarkRate => "dark_rate",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("parameter", format!("unknown parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Cavity transmission scan against detuning (Hz).
    FpSpectrum,
    /// Intensity correlation against delay (s).
    G2Curve,
    /// Michelson visibility against delay (s).
    VisibilityCurve,
    /// Signal-to-background ratio against `P/P_sat`.
    SbrCurve,
}

impl ModelKind {
    pub fn parameters(self) -> &'static [Param] {
        match self {
            ModelKind::FpSpectrum => &[
                Param::T1,
                Param::T2,
                Param::Rabi,
                Param::Scale,
                Param::Offset,
                Param::LaserLinewidth,
                Param::CavityFwhm,
            ],
            ModelKind::G2Curve => &[Param::T1, Param::T2, Param::Rabi, Param::Scale],
            ModelKind::VisibilityCurve => &[Param::T1, Param::T2, Param::Rabi, Param::Scale, Param::CoherentTau],
            ModelKind::SbrCurve => &[
                Param::T1,
                Param::T2,
                Param::Scale,
                Param::LeakagePerPower,
                Param::DarkRate,
            ],
        }
    }

    /// Whether the data are photon counts, which default to Poisson weights.
    pub fn counts_data(self) -> bool {
        matches!(self, ModelKind::FpSpectrum | ModelKind::G2Curve)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: Param,
    pub initial: f64,
    #[serde(default = "neg_inf")]
    pub lower: f64,
    #[serde(default = "pos_inf")]
    pub upper: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl FreeParam {
    pub fn new(name: Param, initial: f64, lower: f64, upper: f64) -> Self {
        FreeParam {
            name,
            initial,
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub model: ModelKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-point standard deviations; see [`FitProblem::sigmas`] for the
    /// default.
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    pub fixed: BTreeMap<Param, f64>,
    pub free: Vec<FreeParam>,
    /// Timing response for `g2_curve`.
    #[serde(default)]
    pub irf: Option<InstrumentResponse>,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Empty("fit data"));
        }
        if self.grid.len() != self.values.len() {
            return Err(Error::Fit("grid and values differ in length".into()));
        }
        if self.grid.iter().chain(&self.values).any(|v| !v.is_finite()) {
            return Err(Error::Fit("data contain non-finite values".into()));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.values.len() {
                return Err(Error::Fit("sigma and values differ in length".into()));
            }
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Fit("sigma must be positive".into()));
            }
        }
        let needed = self.model.parameters();
        for f in &self.free {
            if self.fixed.contains_key(&f.name) {
                return Err(Error::Fit(format!("`{}` is both fixed and free", f.name)));
            }
            if self.free.iter().filter(|g| g.name == f.name).count() > 1 {
                return Err(Error::Fit(format!("`{}` listed twice as free", f.name)));
            }
            if !(f.lower <= f.initial && f.initial <= f.upper) || !f.initial.is_finite() {
                return Err(Error::Fit(format!(
                    "initial value of `{}` lies outside its bounds",
                    f.name
                )));
            }
        }
        for p in needed {
            let assigned = self.fixed.contains_key(p) as usize + self.free.iter().any(|f| f.name == *p) as usize;
            if assigned != 1 {
                return Err(Error::Fit(format!("`{p}` must be either fixed or free")));
            }
        }
        for p in self.fixed.keys().copied().chain(self.free.iter().map(|f| f.name)) {
            if !needed.contains(&p) {
                return Err(Error::Fit(format!("`{p}` is not a parameter of this model")));
            }
        }
        if self.values.len() < 2 * self.free.len() {
            return Err(Error::Fit(format!(
                "{} data points cannot constrain {} free parameters",
                self.values.len(),
                self.free.len()
            )));
        }
        if self.irf.is_some() && self.model != ModelKind::G2Curve {
            return Err(Error::Fit("an IRF applies to g2_curve only".into()));
        }
        if let Some(irf) = &self.irf {
            irf.validate()?;
        }
        Ok(())
    }

    /// Given sigmas, or `sqrt(max(y, 1))` for count data and unit weights
    /// otherwise.
    pub fn sigmas(&self) -> Vec<f64> {
        match &self.sigma {
            Some(s) => s.clone(),
            None if self.model.counts_data() => self.values.iter().map(|y| y.max(1.0).sqrt()).collect(),
            None => vec![1.0; self.values.len()],
        }
    }

    /// True when the weights carry no absolute noise scale.
    pub fn unit_weights(&self) -> bool {
        self.sigma.is_none() && !self.model.counts_data()
    }

    /// Fixed values merged with the initial values of the free parameters.
    pub fn initial_parameters(&self) -> BTreeMap<Param, f64> {
        let mut m = self.fixed.clone();
        for f in &self.free {
            m.insert(f.name, f.initial);
        }
        m
    }
}

fn get(params: &BTreeMap<Param, f64>, p: Param) -> Result<f64> {
    params
        .get(&p)
        .copied()
        .ok_or_else(|| Error::Fit(format!("missing parameter `{p}`")))
}

fn emitter(params: &BTreeMap<Param, f64>, rabi: f64) -> Result<TwoLevelParams> {
    TwoLevelParams::new(get(params, Param::T1)?, get(params, Param::T2)?, rabi)
}

/// Discretized response: offsets and unit-sum weights.
fn response_nodes(irf: &InstrumentResponse) -> (Vec<f64>, Vec<f64>) {
    let width = irf.fwhm();
    if matches!(irf, InstrumentResponse::Delta) || !(width > 0.0) {
        return (vec![0.0], vec![1.0]);
    }
    let h = width / 16.0;
    let half = (irf.support() / h).ceil() as i64;
    let offsets: Vec<f64> = (-half..=half).map(|j| j as f64 * h).collect();
    let mut w: Vec<f64> = offsets
        .iter()
        .map(|&c| irf.cell_weight(c - 0.5 * h, c + 0.5 * h))
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    (offsets, w)
}

/// Model prediction on the problem's grid for a complete parameter map.
pub fn evaluate_model(problem: &FitProblem, params: &BTreeMap<Param, f64>) -> Result<Vec<f64>> {
    let grid = &problem.grid;
    let scale = get(params, Param::Scale)?;
    match problem.model {
        ModelKind::FpSpectrum => {
            let p = emitter(params, get(params, Param::Rabi)?)?;
            let cavity = get(params, Param::CavityFwhm)?;
            let laser = get(params, Param::LaserLinewidth)?;
            if !(cavity > 0.0) {
                return Err(Error::invalid("cavity_fwhm", "must be positive"));
            }
            if !(laser >= 0.0) {
                return Err(Error::invalid("laser_linewidth", "must be >= 0"));
            }
            let offset = get(params, Param::Offset)?;
            // grid need not be sorted here, so evaluate the poles directly
            let s = line_spectrum(&p, laser)?.convolve_lorentzian(cavity);
            let k = scale * PI * 0.5 * cavity * 2.0 * PI;
            Ok(grid
                .iter()
                .map(|&f| {
                    let w = 2.0 * PI * f;
                    k * (s.incoherent_density(w) + s.coherent.density(w)) + offset
                })
                .collect())
        }
        ModelKind::G2Curve => {
            let p = emitter(params, get(params, Param::Rabi)?)?;
            if p.rabi == 0.0 {
                return Err(Error::NoEmission("g2 undefined without drive"));
            }
            let c = mollow_coefficients(&p)?;
            let (offsets, weights) = match &problem.irf {
                Some(irf) => response_nodes(irf),
                None => (vec![0.0], vec![1.0]),
            };
            Ok(grid
                .iter()
                .map(|&t| {
                    scale
                        * offsets
                            .iter()
                            .zip(&weights)
                            .map(|(s, w)| w * c.g2((t - s).abs()))
                            .sum::<f64>()
                })
                .collect())
        }
        ModelKind::VisibilityCurve => {
            let p = emitter(params, get(params, Param::Rabi)?)?;
            let tau = get(params, Param::CoherentTau)?;
            if !(tau > 0.0) {
                return Err(Error::invalid("coherent_tau", "must be positive"));
            }
            visibility_unchecked(&p, tau, scale, grid)
        }
        ModelKind::SbrCurve => {
            let t1 = get(params, Param::T1)?;
            let t2 = get(params, Param::T2)?;
            let leak = get(params, Param::LeakagePerPower)?;
            let dark = get(params, Param::DarkRate)?;
            grid.iter()
                .map(|&power| {
                    let p = emitter(params, rabi_from_power(power, t1, t2)?)?;
                    let signal = scale * p.gamma() * steady_state(&p)?.excited_population();
                    let bg = leak * power + dark;
                    if !(bg > 0.0) {
                        return Err(Error::invalid("background", "SBR model needs a positive background"));
                    }
                    Ok(signal / bg)
                })
                .collect()
        }
    }
}
