//! Optical Bloch equations for the resonantly or near-resonantly driven
//! two-level emitter.
//!
//! With `u = 2 Re ρ_eg`, `v = 2 Im ρ_eg`, `w = ρ_ee − ρ_gg` and the drive
//! Hamiltonian `H = −(Δ/2) σz + (Ω/2) σx` in the laser frame:
//!
//! ```text
//! du/dt = −γ u + Δ v
//! dv/dt = −Δ u − γ v − Ω w
//! dw/dt =  Ω v − Γ (w + 1)
//! ```
//!
//! with Γ = 1/T₁ and γ = 1/T₂.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::TwoLevelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub const GROUND: BlochVector = BlochVector {
        u: 0.0,
        v: 0.0,
        w: -1.0,
    };

    pub fn length(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    /// ρ_ee = (w + 1)/2
    pub fn excited_population(&self) -> f64 {
        0.5 * (self.w + 1.0)
    }

    /// |ρ_eg|² = (u² + v²)/4
    pub fn coherence_sq(&self) -> f64 {
        0.25 * (self.u * self.u + self.v * self.v)
    }

    /// ⟨σ⁻⟩ = (u − i v)/2 as (re, im).
    pub fn sigma_minus(&self) -> (f64, f64) {
        (0.5 * self.u, -0.5 * self.v)
    }

    pub(crate) fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.w)
    }

    pub(crate) fn from_vector(x: &Vector3<f64>) -> Self {
        BlochVector {
            u: x[0],
            v: x[1],
            w: x[2],
        }
    }
}

/// Homogeneous part `M` of `dx/dt = M x + b`.
pub fn generator(p: &TwoLevelParams) -> Matrix3<f64> {
    let gamma = p.gamma();
    let g = p.coherence_rate();
    let d = p.detuning;
    let om = p.rabi;
    Matrix3::new(
        -g, d, 0.0, //
        -d, -g, -om, //
        0.0, om, -gamma,
    )
}

/// Inhomogeneous drive term `b` of `dx/dt = M x + b`.
pub fn source(p: &TwoLevelParams) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -p.gamma())
}

/// The affine system packed as a 4×4 matrix acting on `(x, c)` where `c` is
/// held constant and multiplies the source term.
pub fn affine_generator(p: &TwoLevelParams) -> Matrix4<f64> {
    let m = generator(p);
    let b = source(p);
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    a.fixed_view_mut::<3, 1>(0, 3).copy_from(&b);
    a
}

/// Stationary solution of the Bloch equations.
pub fn steady_state(p: &TwoLevelParams) -> Result<BlochVector> {
    p.validate()?;
    let m = generator(p);
    let rhs = -source(p);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Unsupported("singular Bloch generator".into()))?;
    Ok(BlochVector::from_vector(&x))
}

/// Closed-form on-resonance steady state, used as an independent check on
/// the linear solve: `w = −1/(1+s)`, `v = Ω/(γ(1+s))`, `u = 0`.
pub fn steady_state_resonant(p: &TwoLevelParams) -> BlochVector {
    let s = p.saturation();
    BlochVector {
        u: 0.0,
        v: p.rabi * p.t2 / (1.0 + s),
        w: -1.0 / (1.0 + s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const T1: f64 = 760e-12;

    /// Forward RK4 integration of the Bloch equations, an oracle for the
    /// linear-solve steady state.
    fn integrate(p: &TwoLevelParams, x0: Vector3<f64>, t: f64, steps: usize) -> Vector3<f64> {
        let m = generator(p);
        let b = source(p);
        let f = |x: &Vector3<f64>| m * x + b;
        let h = t / steps as f64;
        let mut x = x0;
        for _ in 0..steps {
            let k1 = f(&x);
            let k2 = f(&(x + k1 * (h / 2.0)));
            let k3 = f(&(x + k2 * (h / 2.0)));
            let k4 = f(&(x + k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        x
    }

    #[test]
    fn undriven_is_ground() {
        let p = TwoLevelParams::new(T1, 2.0 * T1, 0.0).unwrap();
        let s = steady_state(&p).unwrap();
        assert_eq!((s.u, s.v), (0.0, 0.0));
        assert_relative_eq!(s.w, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn saturation_quarter_population() {
        let p = TwoLevelParams::new(T1, 2.0 * T1, 1.0 / (T1 * 2f64.sqrt())).unwrap();
        let s = steady_state(&p).unwrap();
        assert_relative_eq!(s.excited_population(), 0.25, epsilon = 1e-13);
        let x = integrate(&p, BlochVector::GROUND.to_vector(), 60.0 * T1, 60_000);
        assert_relative_eq!(0.5 * (x[2] + 1.0), 0.25, epsilon = 1e-10);
        assert_relative_eq!(x[1], s.v, epsilon = 1e-10);
    }

    #[test]
    fn strong_drive_saturates() {
        let p = TwoLevelParams::new(T1, 2.0 * T1, 1e4 / T1).unwrap();
        let s = steady_state(&p).unwrap();
        assert_relative_eq!(s.excited_population(), 0.5, epsilon = 1e-7);
    }

    #[test]
    fn resonant_closed_form_matches_solve() {
        for &(t2f, om) in &[(2.0, 0.22), (1.5, 0.6), (1.2, 1.5), (0.5, 3.0)] {
            let p = TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap();
            let a = steady_state(&p).unwrap();
            let b = steady_state_resonant(&p);
            assert_relative_eq!(a.u, b.u, epsilon = 1e-14);
            assert_relative_eq!(a.v, b.v, epsilon = 1e-13);
            assert_relative_eq!(a.w, b.w, epsilon = 1e-13);
        }
    }

    #[test]
    fn detuned_population_lorentzian() {
        // ρ_ee = (s/2) / (1 + Δ²T₂² + s) for the standard Bloch equations.
        let p = TwoLevelParams::new(T1, 1.6 * T1, 0.8 / T1)
            .unwrap()
            .with_detuning(1.3 / T1)
            .unwrap();
        let s = p.saturation();
        let d2 = (p.detuning * p.t2).powi(2);
        let expected = 0.5 * s / (1.0 + d2 + s);
        assert_relative_eq!(
            steady_state(&p).unwrap().excited_population(),
            expected,
            epsilon = 1e-13
        );
    }

    proptest::proptest! {
        #[test]
        fn inside_bloch_ball(om in 0.0f64..20.0, t2f in 0.05f64..2.0, det in -10.0f64..10.0) {
            let p = TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap().with_detuning(det / T1).unwrap();
            let s = steady_state(&p).unwrap();
            proptest::prop_assert!(s.length() <= 1.0 + 1e-12);
            proptest::prop_assert!(s.excited_population() >= -1e-15 && s.excited_population() <= 0.5 + 1e-12);
        }
    }
}
