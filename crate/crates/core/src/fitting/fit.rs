//! Weighted nonlinear least squares over a [`FitProblem`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lm::{levenberg_marquardt, LmOptions, LmOutcome};
use super::model::{evaluate_model, FitProblem, ModelKind, Param};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Free parameters at the optimum.
    pub estimates: BTreeMap<Param, f64>,
    /// Linearized standard errors of the free parameters.
    pub stderr: BTreeMap<Param, f64>,
    /// Fixed and fitted values together.
    pub parameters: BTreeMap<Param, f64>,
    /// `sqrt(Σ ((model − data)/σ)²)`.
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of starting points tried.
    pub starts: usize,
}

impl FitResult {
    pub fn estimate(&self, p: Param) -> Option<f64> {
        self.parameters.get(&p).copied()
    }
}

struct Layout {
    names: Vec<Param>,
    scale: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Unscaled bounds, so rounding in `x · scale` cannot leave them.
    bounds: Vec<(f64, f64)>,
}

impl Layout {
    fn new(problem: &FitProblem) -> Self {
        let mut names = Vec::new();
        let mut scale = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut bounds = Vec::new();
        for f in &problem.free {
            let mut hi = f.upper;
            // T₂ ≤ 2T₁ is a hard bound whenever T₁ is known
            if f.name == Param::T2 {
                if let Some(t1) = problem.fixed.get(&Param::T1) {
                    hi = hi.min(2.0 * t1);
                }
            }
            let s = if f.initial != 0.0 {
                f.initial.abs()
            } else if (hi - f.lower).is_finite() && hi > f.lower {
                hi - f.lower
            } else {
                1.0
            };
            names.push(f.name);
            scale.push(s);
            lower.push(f.lower / s);
            upper.push(hi / s);
            bounds.push((f.lower, hi));
        }
        Layout {
            names,
            scale,
            lower,
            upper,
            bounds,
        }
    }

    fn params(&self, problem: &FitProblem, x: &[f64]) -> BTreeMap<Param, f64> {
        let mut m = problem.fixed.clone();
        for (i, name) in self.names.iter().enumerate() {
            let (lo, hi) = self.bounds[i];
            m.insert(*name, (x[i] * self.scale[i]).clamp(lo, hi));
        }
        m
    }
}

fn run(problem: &FitProblem, layout: &Layout, sigma: &[f64], x0: &[f64]) -> Result<LmOutcome> {
    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        let m = evaluate_model(problem, &layout.params(problem, x))?;
        Ok(m.iter()
            .zip(&problem.values)
            .zip(sigma)
            .map(|((m, y), s)| (m - y) / s)
            .collect())
    };
    levenberg_marquardt(residuals, x0, &layout.lower, &layout.upper, &LmOptions::default())
}

/// Fits the free parameters.
///
/// Starts from the given initial values; if that does not converge, also
/// from 25%, 50% and 75% of each bounded interval (or ½, 1, 2 times the
/// initial value for unbounded parameters) and keeps the best converged
/// solution. Standard errors come from the inverse of `JᵀJ` at the optimum,
/// rescaled by the reduced χ² when the data carry no noise scale.
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let layout = Layout::new(problem);
    let sigma = problem.sigmas();
    let x0: Vec<f64> = problem
        .free
        .iter()
        .zip(&layout.scale)
        .map(|(f, s)| f.initial / s)
        .collect();
    let mut best = run(problem, &layout, &sigma, &x0)?;
    let mut starts = 1;
    let mut iterations = best.iterations;
    if !best.converged {
        for frac in [0.25, 0.5, 0.75] {
            let xs: Vec<f64> = (0..x0.len())
                .map(|i| {
                    let (lo, hi) = (layout.lower[i], layout.upper[i]);
                    if lo.is_finite() && hi.is_finite() {
                        lo + frac * (hi - lo)
                    } else {
                        x0[i] * 2f64.powf((frac - 0.5) * 4.0)
                    }
                })
                .collect();
            starts += 1;
            let Ok(out) = run(problem, &layout, &sigma, &xs) else {
                continue;
            };
            iterations += out.iterations;
            let better = match (out.converged, best.converged) {
                (true, false) => true,
                (false, true) => false,
                _ => out.cost < best.cost,
            };
            if better {
                best = out;
            }
        }
    }

    let m = problem.values.len();
    let n = layout.names.len();
    let dof = m.saturating_sub(n).max(1);
    let chi2 = 2.0 * best.cost;
    let reduced_chi2 = chi2 / dof as f64;
    let cov = covariance(&best.jacobian);
    let inflate = if problem.unit_weights() { reduced_chi2 } else { 1.0 };
    let parameters = layout.params(problem, &best.x);
    let mut estimates = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    for (i, name) in layout.names.iter().enumerate() {
        estimates.insert(*name, parameters[name]);
        let var = cov.as_ref().map_or(f64::NAN, |c| c[(i, i)]);
        stderr.insert(*name, (var * inflate).sqrt() * layout.scale[i]);
    }
    Ok(FitResult {
        estimates,
        stderr,
        parameters,
        residual_norm: chi2.sqrt(),
        reduced_chi2,
        iterations,
        converged: best.converged,
        starts,
    })
}

fn covariance(j: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let jtj = j.tr_mul(j);
    jtj.clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| jtj.try_inverse())
}

/// Parametric bootstrap: refits `resamples` noisy copies of the fitted model
/// (Poisson for count data, Gaussian with the fit's noise scale otherwise)
/// and returns the spread of each free parameter.
pub fn bootstrap_stderr(
    problem: &FitProblem,
    result: &FitResult,
    resamples: usize,
    seed: u64,
) -> Result<BTreeMap<Param, f64>> {
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least two"));
    }
    let model = evaluate_model(problem, &result.parameters)?;
    let sigma = problem.sigmas();
    let noise = if problem.unit_weights() {
        result.reduced_chi2.sqrt()
    } else {
        1.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: BTreeMap<Param, Vec<f64>> = BTreeMap::new();
    for _ in 0..resamples {
        let values: Vec<f64> = model
            .iter()
            .zip(&sigma)
            .map(|(&m, &s)| {
                if problem.model.counts_data() && problem.sigma.is_none() && m > 0.0 {
                    Poisson::new(m).map(|d| d.sample(&mut rng)).unwrap_or(m)
                } else {
                    m + Normal::new(0.0, s * noise).map(|d| d.sample(&mut rng)).unwrap_or(0.0)
                }
            })
            .collect();
        let mut p = problem.clone();
        p.values = values;
        for f in &mut p.free {
            f.initial = result.estimates[&f.name];
        }
        let r = fit(&p)?;
        for (k, v) in r.estimates {
            draws.entry(k).or_default().push(v);
        }
    }
    Ok(draws
        .into_iter()
        .map(|(k, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (k, var.sqrt())
        })
        .collect())
}

/// JSON-compatible summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub estimates: BTreeMap<Param, f64>,
    pub stderr: BTreeMap<Param, f64>,
    pub parameters: BTreeMap<Param, f64>,
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// SHA-256 of the serialized problem.
    pub input_digest: String,
}

impl FitReport {
    pub fn new(problem: &FitProblem, result: &FitResult) -> Self {
        FitReport {
            model: problem.model,
            estimates: result.estimates.clone(),
            stderr: result.stderr.clone(),
            parameters: result.parameters.clone(),
            residual_norm: result.residual_norm,
            reduced_chi2: result.reduced_chi2,
            iterations: result.iterations,
            converged: result.converged,
            input_digest: input_digest(problem),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Hex SHA-256 of the problem's JSON form.
pub fn input_digest(problem: &FitProblem) -> String {
    let bytes = serde_json::to_vec(problem).expect("problem serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
