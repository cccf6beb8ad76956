//! Closed-form resonance fluorescence on resonance (Δ = 0).
//!
//! Notation: Γ = 1/T₁, γ = 1/T₂, Ω the Rabi frequency, all angular.
//!
//! * damping `η = (Γ + γ)/2`
//! * oscillation `μ = Ω′ = sqrt(Ω² − ((Γ − γ)/2)²)`, continued to
//!   `κ = sqrt(((Γ − γ)/2)² − Ω²)` (cos → cosh, sin → sinh) when the radicand
//!   is negative
//! * coherent fraction `Γ² / (2(Ω² + Γγ)) = T₂ / (2T₁(1 + Ω²T₁T₂))`
//! * `N = (Ω² − Γ(Γ − γ)) / (2(Ω² + Γγ))`
//! * `M μ = (Ω²(3Γ − γ) − Γ(Γ − γ)²) / (4(Ω² + Γγ))`
//! * `A = Ω² − Γ(Γ − γ)`, `B = 2Ω²(3Γ − γ) − 2Γ(Γ − γ)²`
//!
//! The normalized incoherent field correlation is
//! `½ e^{−γτ} + e^{−ητ}[N cos μτ + M sin μτ]` and the intensity correlation
//! `1 − e^{−η|τ|}[cos μ|τ| + (η/μ) sin μ|τ|]`. `A`, `B` and the sign of
//! the `Γ(Γ − γ)` term in `A` are the ones that reproduce the quantum
//! regression result; `μ` carries the factor ¼ under the root for the same
//! reason. All of them are checked against [`crate::oracle`] in the tests.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::steady_state;
use crate::correlation::{CorrelationKind, CorrelationTrace};
use crate::error::{Error, Result};
use crate::params::TwoLevelParams;
use crate::spectrum::{check_grid, CoherentLine, CoherentPart, Line, LineSpectrum, SpectrumTrace};
use crate::units::{hz_to_angular, lorentzian_field_decay_rate};

/// Below this value of |μ|·T₁ the oscillatory factors use their series limit.
pub const CRITICAL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    Underdamped,
    Critical,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollowCoefficients {
    pub a: f64,
    pub b: f64,
    /// |μ|; the hyperbolic rate κ when overdamped.
    pub mu: f64,
    pub eta: f64,
    pub omega_prime: f64,
    pub n_coef: f64,
    /// `M`; zero in the critical case, where only `M μ` is meaningful.
    pub m_coef: f64,
    /// `M μ`, finite on every branch.
    pub m_times_mu: f64,
    /// Signed radicand `Ω² − ((Γ − γ)/2)²`.
    pub radicand: f64,
    pub damping: Damping,
    pub gamma: f64,
    pub coherence_rate: f64,
    pub coherent_fraction: f64,
}

pub fn mollow_coefficients(p: &TwoLevelParams) -> Result<MollowCoefficients> {
    p.validate()?;
    p.require_resonant("mollow_coefficients")?;
    Ok(coefficients_unchecked(p))
}

pub(crate) fn coefficients_unchecked(p: &TwoLevelParams) -> MollowCoefficients {
    let gam = p.gamma();
    let g = p.coherence_rate();
    let om2 = p.rabi * p.rabi;
    let eta = 0.5 * (gam + g);
    let half_diff = 0.5 * (gam - g);
    let radicand = om2 - half_diff * half_diff;
    let mu = radicand.abs().sqrt();
    let damping = if mu * p.t1 < CRITICAL_THRESHOLD {
        Damping::Critical
    } else if radicand > 0.0 {
        Damping::Underdamped
    } else {
        Damping::Overdamped
    };
    let denom = om2 + gam * g;
    let coherent_fraction = gam * gam / (2.0 * denom);
    let n_coef = (om2 - gam * (gam - g)) / (2.0 * denom);
    let m_times_mu = (om2 * (3.0 * gam - g) - gam * (gam - g).powi(2)) / (4.0 * denom);
    let m_coef = if damping == Damping::Critical {
        0.0
    } else {
        m_times_mu / mu
    };
    MollowCoefficients {
        a: om2 - gam * (gam - g),
        b: 2.0 * om2 * (3.0 * gam - g) - 2.0 * gam * (gam - g).powi(2),
        mu,
        eta,
        omega_prime: mu,
        n_coef,
        m_coef,
        m_times_mu,
        radicand,
        damping,
        gamma: gam,
        coherence_rate: g,
        coherent_fraction,
    }
}

impl MollowCoefficients {
    /// `(e^{−ητ} c(τ), e^{−ητ} s(τ))` with `c = cos μτ`, `s = sin(μτ)/μ`
    /// on the underdamped branch and their hyperbolic or series forms
    /// otherwise. `tau >= 0`.
    pub fn damped_kernel(&self, tau: f64) -> (f64, f64) {
        let eta = self.eta;
        match self.damping {
            Damping::Underdamped => {
                let e = (-eta * tau).exp();
                let (s, c) = (self.mu * tau).sin_cos();
                (e * c, e * s / self.mu)
            }
            Damping::Overdamped => {
                let k = self.mu;
                let x = k * tau;
                if x < 1.0 {
                    let e = (-eta * tau).exp();
                    (e * x.cosh(), e * x.sinh() / k)
                } else {
                    let a = (-(eta - k) * tau).exp();
                    let b = (-(eta + k) * tau).exp();
                    (0.5 * (a + b), 0.5 * (a - b) / k)
                }
            }
            Damping::Critical => {
                let e = (-eta * tau).exp();
                let t2 = tau * tau * self.radicand;
                (e * (1.0 - 0.5 * t2), e * tau * (1.0 - t2 / 6.0))
            }
        }
    }

    /// Normalized intensity correlation at delay `tau` (either sign).
    pub fn g2(&self, tau: f64) -> f64 {
        let (ec, es) = self.damped_kernel(tau.abs());
        1.0 - (ec + self.eta * es)
    }

    /// Incoherent field correlation normalized to the excited population,
    /// so that its value at zero delay is `½ + N`, the incoherent fraction.
    pub fn g1_incoherent_raw(&self, tau: f64) -> f64 {
        let (ec, es) = self.damped_kernel(tau);
        0.5 * (-self.coherence_rate * tau).exp() + self.n_coef * ec + self.m_times_mu * es
    }

    /// Incoherent spectral density per unit angular frequency, normalized to
    /// unit excited population (integrates to `½ + N`).
    pub fn incoherent_density(&self, omega: f64) -> f64 {
        let g = self.coherence_rate;
        let eta = self.eta;
        let w2 = omega * omega;
        let central = 0.5 * g / (w2 + g * g);
        let side = match self.damping {
            Damping::Underdamped => {
                let mu = self.mu;
                let denom = self.denominator();
                let lo = (self.a * eta / 2.0 - self.b * (omega - mu) / (8.0 * mu)) / ((omega - mu).powi(2) + eta * eta);
                let hi = (self.a * eta / 2.0 + self.b * (omega + mu) / (8.0 * mu)) / ((omega + mu).powi(2) + eta * eta);
                (lo + hi) / (2.0 * denom)
            }
            Damping::Overdamped => {
                let k = self.mu;
                let slow = eta - k;
                let fast = eta + k;
                let c_slow = 0.5 * self.n_coef + 0.5 * self.m_times_mu / k;
                let c_fast = 0.5 * self.n_coef - 0.5 * self.m_times_mu / k;
                c_slow * slow / (w2 + slow * slow) + c_fast * fast / (w2 + fast * fast)
            }
            Damping::Critical => {
                let d = w2 + eta * eta;
                self.n_coef * eta / d + self.m_times_mu * (eta * eta - w2) / (d * d)
            }
        };
        (central + side) / PI
    }

    /// `Ω² + Γγ`.
    fn denominator(&self) -> f64 {
        let om2 = self.radicand + 0.25 * (self.gamma - self.coherence_rate).powi(2);
        om2 + self.gamma * self.coherence_rate
    }

    /// Pole decomposition of [`Self::incoherent_density`] scaled by `rate`.
    pub fn incoherent_lines(&self, rate: f64) -> Vec<Line> {
        let g = self.coherence_rate;
        let eta = self.eta;
        let mut lines = vec![Line::lorentzian(0.0, g, 0.5 * rate)];
        match self.damping {
            Damping::Underdamped => {
                let amp = Complex64::new(0.5 * self.n_coef, 0.5 * self.m_coef) * rate;
                lines.push(Line {
                    center: self.mu,
                    width: eta,
                    amp,
                    order: 1,
                });
                lines.push(Line {
                    center: -self.mu,
                    width: eta,
                    amp: amp.conj(),
                    order: 1,
                });
            }
            Damping::Overdamped => {
                let k = self.mu;
                lines.push(Line::lorentzian(
                    0.0,
                    eta - k,
                    rate * (0.5 * self.n_coef + 0.5 * self.m_times_mu / k),
                ));
                lines.push(Line::lorentzian(
                    0.0,
                    eta + k,
                    rate * (0.5 * self.n_coef - 0.5 * self.m_times_mu / k),
                ));
            }
            Damping::Critical => {
                lines.push(Line::lorentzian(0.0, eta, rate * self.n_coef));
                lines.push(Line {
                    center: 0.0,
                    width: eta,
                    amp: Complex64::new(rate * self.m_times_mu, 0.0),
                    order: 2,
                });
            }
        }
        lines
    }
}

/// Coherent fraction of the scattered light, from the steady state, with the
/// textbook expression `(1/2 + T₁/T₂ + 2Ω²T₁²)⁻¹` evaluated alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentFraction {
    pub value: f64,
    pub printed: f64,
    /// `printed − value`; zero only for `T₂ = 2T₁`.
    pub discrepancy: f64,
}

impl CoherentFraction {
    pub fn incoherent(&self) -> f64 {
        1.0 - self.value
    }
}

/// Fraction of elastic scattering `|ρ_eg|² / ρ_ee` on resonance.
pub fn coherent_fraction(p: &TwoLevelParams) -> Result<CoherentFraction> {
    p.validate()?;
    p.require_resonant("coherent_fraction")?;
    let s = p.saturation();
    // For s → 0 the ratio of two O(Ω²) quantities loses digits to the
    // cancellation in w + 1; switch to its exact limit.
    let value = if s > 1e-8 {
        let ss = steady_state(p)?;
        ss.coherence_sq() / ss.excited_population()
    } else {
        p.t2 / (2.0 * p.t1 * (1.0 + s))
    };
    let om_t1 = p.rabi * p.t1;
    let printed = 1.0 / (0.5 + p.t1 / p.t2 + 2.0 * om_t1 * om_t1);
    Ok(CoherentFraction {
        value,
        printed,
        discrepancy: printed - value,
    })
}

/// Steady-state photon emission rate Γρ_ee (1/s), any detuning.
pub fn emission_rate(p: &TwoLevelParams) -> Result<f64> {
    Ok(p.gamma() * steady_state(p)?.excited_population())
}

/// Normalized incoherent field correlation on resonance.
pub fn g1_incoherent_closed(p: &TwoLevelParams, delays: &[f64]) -> Result<CorrelationTrace> {
    let c = mollow_coefficients(p)?;
    if delays.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::invalid("delays", "must be >= 0; use |τ| for negative delays"));
    }
    let norm = 0.5 + c.n_coef;
    if !(norm > 1e-14) {
        return Err(Error::NoEmission("incoherent component vanishes (Ω = 0, T₂ = 2T₁)"));
    }
    let values = delays.iter().map(|&t| c.g1_incoherent_raw(t) / norm).collect();
    Ok(CorrelationTrace::new(
        delays.to_vec(),
        values,
        CorrelationKind::G1Incoherent,
    ))
}

/// Normalized intensity autocorrelation on resonance.
pub fn g2_closed(p: &TwoLevelParams, delays: &[f64]) -> Result<CorrelationTrace> {
    let c = mollow_coefficients(p)?;
    if p.rabi == 0.0 {
        return Err(Error::NoEmission("g2 undefined without drive"));
    }
    let values = delays.iter().map(|&t| c.g2(t)).collect();
    Ok(CorrelationTrace::new(delays.to_vec(), values, CorrelationKind::G2))
}

/// Resonant spectrum as poles, normalized to the emission rate Γρ_ee, with
/// the coherent part given the laser linewidth (FWHM, Hz; 0 for a delta).
pub fn line_spectrum(p: &TwoLevelParams, laser_linewidth_hz: f64) -> Result<LineSpectrum> {
    if !(laser_linewidth_hz >= 0.0) {
        return Err(Error::invalid("laser_linewidth", "must be >= 0"));
    }
    let c = mollow_coefficients(p)?;
    let rate = emission_rate(p)?;
    let cf = coherent_fraction(p)?.value;
    Ok(LineSpectrum {
        incoherent: c.incoherent_lines(rate),
        coherent: CoherentLine {
            weight: rate * cf,
            hwhm: lorentzian_field_decay_rate(laser_linewidth_hz),
        },
    })
}

/// Incoherent spectrum on a linear-frequency grid (Hz), densities per Hz,
/// integrating to `(1 − coherent fraction)·Γρ_ee`. The coherent part is
/// reported as a delta weight.
pub fn spectrum_incoherent_closed(p: &TwoLevelParams, grid_hz: &[f64]) -> Result<SpectrumTrace> {
    check_grid(grid_hz)?;
    let c = mollow_coefficients(p)?;
    let rate = emission_rate(p)?;
    let incoherent = grid_hz
        .iter()
        .map(|&f| 2.0 * PI * rate * c.incoherent_density(hz_to_angular(f)))
        .collect();
    let model = line_spectrum(p, 0.0)?;
    Ok(SpectrumTrace::from_parts(
        grid_hz.to_vec(),
        CoherentPart::Delta {
            weight: rate * c.coherent_fraction,
        },
        incoherent,
        Some(model),
    ))
}

/// Incoherent plus coherent spectrum with the coherent line broadened to the
/// laser linewidth (FWHM, Hz). A zero linewidth yields a delta-weight record.
pub fn spectrum_total(p: &TwoLevelParams, laser_linewidth_hz: f64, grid_hz: &[f64]) -> Result<SpectrumTrace> {
    line_spectrum(p, laser_linewidth_hz)?.sample(grid_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::linspace;
    use crate::spectrum::trapezoid;
    use approx::assert_relative_eq;

    const T1: f64 = 760e-12;

    fn radiative(om: f64) -> TwoLevelParams {
        TwoLevelParams::radiative(T1, om).unwrap()
    }

    #[test]
    fn eta_substitution() {
        for om in [0.0, 0.3, 2.0] {
            let c = mollow_coefficients(&radiative(om)).unwrap();
            assert_relative_eq!(c.eta * T1, 0.75, epsilon = 1e-14);
        }
    }

    #[test]
    fn mu_at_strong_drive() {
        let c = mollow_coefficients(&radiative(1.5)).unwrap();
        assert_eq!(c.damping, Damping::Underdamped);
        assert_relative_eq!(c.mu * T1, (2.25f64 - 0.0625).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c.mu * T1, 1.479, epsilon = 1e-3);
    }

    #[test]
    fn weak_drive_is_overdamped() {
        let c = mollow_coefficients(&radiative(0.1)).unwrap();
        assert_eq!(c.damping, Damping::Overdamped);
        assert!(c.radicand < 0.0);
    }

    #[test]
    fn critical_point_is_continuous() {
        // Ω = (Γ − γ)/2 exactly, then just either side of it.
        let at = radiative(0.25);
        let c = mollow_coefficients(&at).unwrap();
        assert_eq!(c.damping, Damping::Critical);
        let below = mollow_coefficients(&radiative(0.25 - 1e-5)).unwrap();
        let above = mollow_coefficients(&radiative(0.25 + 1e-5)).unwrap();
        assert_eq!(below.damping, Damping::Overdamped);
        assert_eq!(above.damping, Damping::Underdamped);
        for k in 0..50 {
            let t = k as f64 * 0.2 * T1;
            assert_relative_eq!(c.g2(t), below.g2(t), epsilon = 1e-4);
            assert_relative_eq!(c.g2(t), above.g2(t), epsilon = 1e-4);
            assert_relative_eq!(c.g1_incoherent_raw(t), above.g1_incoherent_raw(t), epsilon = 1e-4);
        }
    }

    #[test]
    fn detuned_closed_forms_refused() {
        let p = radiative(1.0).with_detuning(1e9).unwrap();
        assert!(matches!(mollow_coefficients(&p), Err(Error::Unsupported(_))));
        assert!(matches!(coherent_fraction(&p), Err(Error::Unsupported(_))));
        assert!(g2_closed(&p, &[0.0]).is_err());
    }

    #[test]
    fn coherent_fraction_quoted_values() {
        let f22 = coherent_fraction(&radiative(0.22)).unwrap();
        assert!((f22.incoherent() - 0.09).abs() < 0.01, "{}", f22.incoherent());
        let f17 = coherent_fraction(&radiative(0.17)).unwrap();
        assert!((f17.incoherent() - 0.05).abs() < 0.01, "{}", f17.incoherent());
        // printed and steady-state forms coincide when T₂ = 2T₁
        assert_relative_eq!(f22.discrepancy, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_fraction_limits() {
        let f = coherent_fraction(&radiative(1e-6)).unwrap();
        assert_relative_eq!(f.value, 1.0, epsilon = 1e-10);
        let p = TwoLevelParams::new(T1, T1, 1e-3 / T1).unwrap();
        let f = coherent_fraction(&p).unwrap();
        assert_relative_eq!(f.value, 0.5, epsilon = 1e-5);
        // with dephasing the printed expression disagrees: T₁/T₂ + 1/2 = 1.5 vs 2T₁/T₂ = 2
        assert!(f.discrepancy.abs() > 0.1);
    }

    #[test]
    fn coherent_fraction_uses_steady_state_ratio() {
        let p = TwoLevelParams::new(T1, 1.3 * T1, 0.7 / T1).unwrap();
        let ss = steady_state(&p).unwrap();
        let f = coherent_fraction(&p).unwrap();
        assert_relative_eq!(f.value, ss.coherence_sq() / ss.excited_population(), epsilon = 1e-14);
        let c = mollow_coefficients(&p).unwrap();
        assert_relative_eq!(f.value, c.coherent_fraction, epsilon = 1e-13);
    }

    #[test]
    fn g2_limits() {
        let p = radiative(0.6);
        let t = g2_closed(&p, &[0.0, 200.0 * T1]).unwrap();
        assert_eq!(t.values[0], 0.0);
        assert_relative_eq!(t.values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn g2_period_at_strong_drive() {
        let p = radiative(1.5);
        let c = mollow_coefficients(&p).unwrap();
        let period = 2.0 * PI / c.mu;
        assert_relative_eq!(period * 1e9, 3.23, epsilon = 0.01);
        // successive maxima of the damped oscillation sit one period apart
        let ts = linspace(0.0, 12e-9, 120_001);
        let g = g2_closed(&p, &ts).unwrap().values;
        let peaks: Vec<f64> = (1..g.len() - 1)
            .filter(|&i| g[i] > g[i - 1] && g[i] >= g[i + 1])
            .map(|i| ts[i])
            .collect();
        assert!(peaks.len() >= 2);
        assert_relative_eq!(peaks[1] - peaks[0], period, max_relative = 1e-3);
    }

    #[test]
    fn g2_without_drive_rejected() {
        assert!(matches!(g2_closed(&radiative(0.0), &[0.0]), Err(Error::NoEmission(_))));
    }

    #[test]
    fn g1_normalization_and_start() {
        let p = TwoLevelParams::new(T1, 1.7 * T1, 0.9 / T1).unwrap();
        let c = mollow_coefficients(&p).unwrap();
        assert_relative_eq!(c.g1_incoherent_raw(0.0), 0.5 + c.n_coef, epsilon = 1e-15);
        let t = g1_incoherent_closed(&p, &[0.0, 1e-9]).unwrap();
        assert_relative_eq!(t.values[0], 1.0, epsilon = 1e-15);
        assert!(t.values[1].abs() < 1.0);
        assert!(g1_incoherent_closed(&p, &[-1e-9]).is_err());
    }

    #[test]
    fn g1_envelope_decays_on_two_t1() {
        let p = radiative(0.22);
        // asymptotic log-slope of the normalized trace
        let (t_a, t_b) = (12.0 * T1, 16.0 * T1);
        let g = g1_incoherent_closed(&p, &[t_a, t_b]).unwrap().values;
        let tau = (t_b - t_a) / (g[0] / g[1]).ln();
        assert!((tau / (2.0 * T1) - 1.0).abs() < 0.1, "decay time {tau:e}");
        assert_relative_eq!(tau * 1e9, 1.52, epsilon = 0.15);
    }

    #[test]
    fn explicit_formula_matches_pole_form() {
        for &(t2f, om) in &[(2.0, 1.5), (2.0, 0.22), (1.5, 0.6), (2.0, 0.25), (0.8, 0.05)] {
            let p = TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap();
            let c = mollow_coefficients(&p).unwrap();
            let lines = c.incoherent_lines(1.0);
            for k in -200..=200 {
                let w = k as f64 * 0.05 / T1;
                let direct = c.incoherent_density(w);
                let poles: f64 = lines.iter().map(|l| l.density(w)).sum();
                assert_relative_eq!(direct, poles, max_relative = 1e-10, epsilon = 1e-25);
            }
        }
    }

    #[test]
    fn incoherent_area_is_incoherent_fraction() {
        let p = TwoLevelParams::new(T1, 1.5 * T1, 0.6 / T1).unwrap();
        let grid = linspace(-40e9, 40e9, 400_001);
        let s = spectrum_incoherent_closed(&p, &grid).unwrap();
        let rate = emission_rate(&p).unwrap();
        let cf = coherent_fraction(&p).unwrap().value;
        let area = trapezoid(&s.detunings, &s.incoherent);
        // Lorentzian tails beyond ±40 GHz carry ~ γ/(π²·40 GHz) of the weight
        assert_relative_eq!(area / rate, 1.0 - cf, max_relative = 5e-3);
        assert_relative_eq!(s.delta_weight() / rate, cf, epsilon = 1e-14);
        assert_relative_eq!(s.model.unwrap().total_weight(), rate, max_relative = 1e-12);
    }

    #[test]
    fn weak_drive_single_peak() {
        let p = radiative(0.22);
        let grid = linspace(-2e9, 2e9, 4001);
        let s = spectrum_incoherent_closed(&p, &grid).unwrap();
        let maxima = (1..grid.len() - 1)
            .filter(|&i| s.incoherent[i] > s.incoherent[i - 1] && s.incoherent[i] >= s.incoherent[i + 1])
            .count();
        assert_eq!(maxima, 1);
        assert_eq!(
            s.incoherent.iter().cloned().fold(f64::MIN, f64::max),
            s.incoherent[2000]
        );
    }

    #[test]
    fn total_spectrum_weights() {
        let p = radiative(0.22);
        let grid = linspace(-1e9, 1e9, 101);
        let delta = spectrum_total(&p, 0.0, &grid).unwrap();
        let rate = emission_rate(&p).unwrap();
        assert_relative_eq!(delta.delta_weight() / rate, 0.9117, epsilon = 1e-3);
        let lorentz = spectrum_total(&p, 3e6, &grid).unwrap();
        let m = lorentz.model.as_ref().unwrap();
        assert_relative_eq!(m.coherent.weight + m.incoherent_weight(), rate, max_relative = 1e-12);
        assert_eq!(lorentz.delta_weight(), 0.0);
    }

    #[test]
    fn laser_linewidth_sets_coherent_fwhm() {
        let p = radiative(0.22);
        let grid = vec![-1.5e6, 0.0, 1.5e6];
        let s = spectrum_total(&p, 3e6, &grid).unwrap();
        let c = s.coherent_density();
        assert_relative_eq!(c[0], 0.5 * c[1], max_relative = 1e-12);
        assert_relative_eq!(c[2], 0.5 * c[1], max_relative = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn spectrum_even_on_resonance(om in 0.0f64..4.0, t2f in 0.2f64..2.0, f in 0.0f64..3e9) {
            let p = TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap();
            let s = spectrum_total(&p, 3e6, &[-f - 1.0, f + 1.0]).unwrap();
            proptest::prop_assert!((s.total[0] - s.total[1]).abs() <= 1e-12 * s.total[0].abs().max(1e-300));
        }

        #[test]
        fn coherent_fraction_decreases_with_drive(om in 0.0f64..5.0, d in 1e-3f64..1.0, t2f in 0.2f64..2.0) {
            let a = coherent_fraction(&TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap()).unwrap().value;
            let b = coherent_fraction(&TwoLevelParams::new(T1, t2f * T1, (om + d) / T1).unwrap()).unwrap().value;
            proptest::prop_assert!(b < a);
        }

        #[test]
        fn g2_antibunched_before_first_crossing(om in 0.05f64..4.0, t2f in 0.3f64..2.0, x in 0.0f64..1.0) {
            let p = TwoLevelParams::new(T1, t2f * T1, om / T1).unwrap();
            let c = mollow_coefficients(&p).unwrap();
            // first zero of cos μτ + (η/μ) sin μτ; none when not underdamped
            let t_zero = match c.damping {
                Damping::Underdamped => (PI - (c.mu / c.eta).atan()) / c.mu,
                _ => 10.0 * T1,
            };
            // beyond ~20/η the deficit underflows below one ulp of 1
            let t = x * t_zero.min(20.0 / c.eta) * 0.999;
            proptest::prop_assert!(c.g2(t) < 1.0);
            proptest::prop_assert!(c.g2(t) >= -1e-15);
        }
    }
}
