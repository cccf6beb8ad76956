//! Fringe visibility from interferometer samples.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// `a / c`; zero for a flat record.
    pub visibility: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Phase `φ₀` of `c + a cos(φ + φ₀)`.
    pub phase: f64,
    /// Set when the fitted amplitude is indistinguishable from zero.
    pub flat: bool,
}

/// Linear least-squares fit of `counts = c + p cos φ + q sin φ`, reported as
/// `c + a cos(φ + φ₀)` with `a = sqrt(p² + q²)`.
///
/// The phases must cover at least one period: reduced modulo 2π they may
/// leave no gap wider than a quarter period.
pub fn visibility_from_fringe(samples: &[(f64, f64)]) -> Result<FringeFit> {
    if samples.len() < 3 {
        return Err(Error::Empty("fringe needs at least three samples"));
    }
    if samples.iter().any(|(p, c)| !p.is_finite() || !c.is_finite()) {
        return Err(Error::invalid("samples", "non-finite value"));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut wrapped: Vec<f64> = samples.iter().map(|(p, _)| p.rem_euclid(tau)).collect();
    wrapped.sort_by(f64::total_cmp);
    let widest = wrapped
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrapped[0] + tau - wrapped[wrapped.len() - 1], f64::max);
    if widest > 0.25 * tau {
        return Err(Error::invalid("samples", "phases must cover a full period"));
    }
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(phi, y) in samples {
        let row = Vector3::new(1.0, phi.cos(), phi.sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let x = ata
        .cholesky()
        .ok_or_else(|| Error::invalid("samples", "phases do not resolve a sinusoid"))?
        .solve(&atb);
    let (c, p, q) = (x[0], x[1], x[2]);
    if !(c > 0.0) {
        return Err(Error::invalid("samples", "mean count must be positive"));
    }
    let amplitude = p.hypot(q);
    let flat = amplitude <= 1e-9 * c;
    Ok(FringeFit {
        visibility: if flat { 0.0 } else { amplitude / c },
        offset: c,
        amplitude: if flat { 0.0 } else { amplitude },
        phase: if flat { 0.0 } else { (-q).atan2(p) },
        flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};
    use std::f64::consts::PI;

    fn phases(n: usize) -> Vec<f64> {
        (0..n).map(|i| 4.0 * PI * i as f64 / n as f64).collect()
    }

    #[test]
    fn exact_fringe() {
        let s: Vec<(f64, f64)> = phases(50)
            .into_iter()
            .map(|p| (p, 100.0 + 80.0 * (p + 0.3).cos()))
            .collect();
        let f = visibility_from_fringe(&s).unwrap();
        assert_relative_eq!(f.visibility, 0.8, epsilon = 1e-12);
        assert_relative_eq!(f.phase, 0.3, epsilon = 1e-12);
        assert!(!f.flat);
    }

    #[test]
    fn constant_is_flat() {
        let s: Vec<(f64, f64)> = phases(20).into_iter().map(|p| (p, 42.0)).collect();
        let f = visibility_from_fringe(&s).unwrap();
        assert_eq!(f.visibility, 0.0);
        assert!(f.flat);
    }

    #[test]
    fn noisy_half_visibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<(f64, f64)> = (0..1000)
            .map(|_| {
                let p = rng.random::<f64>() * 2.0 * PI;
                let mean = 200.0 * (1.0 + 0.5 * p.cos());
                (p, Poisson::new(mean).unwrap().sample(&mut rng))
            })
            .collect();
        let f = visibility_from_fringe(&s).unwrap();
        assert!((f.visibility - 0.5).abs() < 0.05, "{}", f.visibility);
    }

    #[test]
    fn partial_period_refused() {
        let s: Vec<(f64, f64)> = (0..10).map(|i| (0.1 * i as f64, 1.0)).collect();
        assert!(visibility_from_fringe(&s).is_err());
    }
}
