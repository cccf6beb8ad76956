//! Bounded Levenberg–Marquardt least squares.
//!
//! Minimizes `½ Σ rᵢ(x)²` subject to `lower ≤ x ≤ upper`. Steps solve
//! `(JᵀJ + λ diag JᵀJ) δ = −Jᵀr` over the variables not pinned at a bound
//! by the gradient, and are projected back into the box. The Jacobian uses
//! one-sided differences pointing into the box. Callers should scale
//! variables to order one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Convergence requires `‖δ‖ / (‖x‖ + ε)` below this...
    pub step_tolerance: f64,
    /// ...together with a relative cost change below this.
    pub cost_tolerance: f64,
    /// Alternatively the projected gradient may fall below this, relative
    /// to the cost.
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            step_tolerance: 1e-8,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// `½ Σ r²`
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn jacobian<F>(f: &mut F, x: &[f64], r: &[f64], upper: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let m = r.len();
    let n = x.len();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let mut h = 1e-7 * x[k].abs().max(1e-3);
        if x[k] + h > upper[k] {
            h = -h;
        }
        xp[k] = x[k] + h;
        let rp = match f(&xp) {
            Ok(v) => v,
            Err(_) => {
                xp[k] = x[k] - h;
                h = -h;
                f(&xp)?
            }
        };
        for i in 0..m {
            j[(i, k)] = (rp[i] - r[i]) / h;
        }
        xp[k] = x[k];
    }
    Ok(j)
}

pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Fit("bounds do not match the parameter count".into()));
    }
    if (0..n).any(|i| !(lower[i] <= upper[i])) {
        return Err(Error::Fit("lower bound exceeds upper bound".into()));
    }
    let mut x: Vec<f64> = (0..n).map(|i| x0[i].clamp(lower[i], upper[i])).collect();
    let mut r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residual at the starting point".into()));
    }
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = jacobian(&mut f, &x, &r, upper)?;

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let rv = DVector::from_column_slice(&r);
        let g = jac.tr_mul(&rv);
        let jtj = jac.tr_mul(&jac);
        let free: Vec<usize> = (0..n)
            .filter(|&i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if free.is_empty() || pg <= opts.gradient_tolerance * cost {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e20 {
            let k = free.len();
            let mut a = DMatrix::zeros(k, k);
            let mut b = DVector::zeros(k);
            for (p, &i) in free.iter().enumerate() {
                b[p] = -g[i];
                for (q, &j) in free.iter().enumerate() {
                    a[(p, q)] = jtj[(i, j)];
                }
                a[(p, p)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.clone().cholesky().map(|c| c.solve(&b)).or_else(|| a.lu().solve(&b)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = x.clone();
            for (p, &i) in free.iter().enumerate() {
                trial[i] = (x[i] + step[p]).clamp(lower[i], upper[i]);
            }
            let moved: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt() + 1e-12;
            if moved == 0.0 {
                converged = true;
                break;
            }
            match f(&trial) {
                Ok(rt) if rt.iter().all(|v| v.is_finite()) => {
                    let ct = cost_of(&rt);
                    if ct < cost {
                        let rel_cost = (cost - ct) / cost;
                        x = trial;
                        r = rt;
                        cost = ct;
                        lambda = (lambda / 10.0).max(1e-12);
                        accepted = true;
                        if moved / scale < opts.step_tolerance && rel_cost < opts.cost_tolerance {
                            converged = true;
                        }
                        break;
                    }
                    if moved / scale < opts.step_tolerance && (ct - cost) <= opts.cost_tolerance * cost {
                        // no further progress is resolvable
                        converged = true;
                        break;
                    }
                }
                _ => {}
            }
            lambda *= 10.0;
        }
        if converged || !accepted {
            break;
        }
        jac = jacobian(&mut f, &x, &r, upper)?;
    }
    if converged {
        jac = jacobian(&mut f, &x, &r, upper)?;
    }
    Ok(LmOutcome {
        x,
        cost,
        residuals: r,
        jacobian: jac,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(out.x[1], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn exponential_decay() {
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-1.7 * t).exp() + 0.5).collect();
        let f = |x: &[f64]| {
            Ok(ts
                .iter()
                .zip(&ys)
                .map(|(t, y)| x[0] * (-x[1] * t).exp() + x[2] - y)
                .collect())
        };
        let out = levenberg_marquardt(f, &[1.0, 1.0, 0.0], &[0.0; 3], &[10.0; 3], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.x[1], 1.7, epsilon = 1e-8);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained optimum at 2, upper bound at 1
        let f = |x: &[f64]| Ok(vec![x[0] - 2.0, 0.1 * (x[0] - 2.0)]);
        let out = levenberg_marquardt(f, &[0.0], &[0.0], &[1.0], &LmOptions::default()).unwrap();
        assert_eq!(out.x[0], 1.0);
        assert!(out.converged);
    }

    #[test]
    fn invalid_region_is_avoided() {
        // residual undefined above 1.5; optimum at 1.2
        let f = |x: &[f64]| {
            if x[0] > 1.5 {
                Err(Error::Fit("outside".into()))
            } else {
                Ok(vec![x[0] - 1.2, 3.0 * (x[0] - 1.2)])
            }
        };
        let out = levenberg_marquardt(f, &[0.1], &[0.0], &[10.0], &LmOptions::default()).unwrap();
        assert_relative_eq!(out.x[0], 1.2, epsilon = 1e-9);
    }
}
