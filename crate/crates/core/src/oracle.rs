//! Two-time correlations from the Bloch equations via the quantum regression
//! theorem, valid for any detuning.
//!
//! For `f_k(τ) = ⟨σ_k(τ) σ⁻(0)⟩` the regression theorem gives
//! `df/dτ = M f + b ⟨σ⁻⟩` with the Bloch generator `M`, source `b` and initial
//! values `f_x = ρ_ee`, `f_y = −iρ_ee`, `f_z = −⟨σ⁻⟩`. The field correlation is
//! `⟨σ⁺(τ)σ⁻(0)⟩ = (f_x + i f_y)/2`. The intensity correlation is the excited
//! population after a detection, `g²(τ) = ρ_ee(τ | ground) / ρ_ee`.
//!
//! Two propagators are available: the matrix exponential of the affine
//! generator, and classical RK4 stepping with a step-doubling error check.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Matrix4x3, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{affine_generator, generator, steady_state, BlochVector};
use crate::correlation::{CorrelationKind, CorrelationTrace};
use crate::error::{Error, Result};
use crate::params::TwoLevelParams;
use crate::spectrum::{check_grid, CoherentPart, SpectrumTrace};
use crate::units::{hz_to_angular, lorentzian_field_decay_rate};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    #[default]
    MatrixExponential,
    /// RK4 with an a-posteriori error estimate from step doubling; fails
    /// when the estimate exceeds `tolerance` (absolute, on populations).
    TimeStepping { tolerance: f64 },
}

/// `⟨σ⁺(τ)σ⁻(0)⟩` on a set of delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCorrelation {
    pub delays: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `|⟨σ⁻⟩|²`, the τ → ∞ limit carried by coherent scattering.
    pub coherent_level: f64,
    pub excited_population: f64,
    /// `values / ρ_ee`; for an undriven emitter, the dipole propagator
    /// `exp(−τ/T₂ + iΔτ)` with unit initial value.
    pub normalized: Vec<Complex64>,
}

impl FieldCorrelation {
    /// Unnormalized real part as a trace.
    pub fn to_trace(&self) -> CorrelationTrace {
        CorrelationTrace::new(
            self.delays.clone(),
            self.values.iter().map(|z| z.re).collect(),
            CorrelationKind::G1Total,
        )
    }

    /// `⟨σ⁺(τ)σ⁻(0)⟩ − |⟨σ⁻⟩|²`.
    pub fn incoherent(&self) -> Vec<Complex64> {
        self.values.iter().map(|z| z - self.coherent_level).collect()
    }
}

struct RegressionInit {
    re: Vector4<f64>,
    im: Vector4<f64>,
    ground: Vector4<f64>,
    steady: BlochVector,
}

fn regression_init(p: &TwoLevelParams) -> Result<RegressionInit> {
    let ss = steady_state(p)?;
    let rho_ee = ss.excited_population();
    let (sm_re, sm_im) = ss.sigma_minus();
    // f(0) = (ρ_ee, −iρ_ee, −⟨σ⁻⟩); the fourth slot carries the source scale.
    let re = Vector4::new(rho_ee, 0.0, -sm_re, sm_re);
    let im = Vector4::new(0.0, -rho_ee, -sm_im, sm_im);
    let ground = Vector4::new(0.0, 0.0, -1.0, 1.0);
    Ok(RegressionInit {
        re,
        im,
        ground,
        steady: ss,
    })
}

fn initial_columns(init: &RegressionInit) -> Matrix4x3<f64> {
    Matrix4x3::from_columns(&[init.re, init.im, init.ground])
}

/// Propagates the three regression vectors to every delay magnitude.
fn propagate(p: &TwoLevelParams, taus: &[f64], prop: Propagator) -> Result<(RegressionInit, Vec<Matrix4x3<f64>>)> {
    let init = regression_init(p)?;
    let x0 = initial_columns(&init);
    let a = affine_generator(p);
    let out = match prop {
        Propagator::MatrixExponential => taus.iter().map(|&t| (a * t.abs()).exp() * x0).collect(),
        Propagator::TimeStepping { tolerance } => rk4_at(p, &a, x0, taus, tolerance)?,
    };
    Ok((init, out))
}

fn rk4_run(a: &Matrix4<f64>, x0: Matrix4x3<f64>, order: &[(usize, f64)], h_max: f64, n: usize) -> Vec<Matrix4x3<f64>> {
    let mut out = vec![Matrix4x3::zeros(); n];
    let mut x = x0;
    let mut t = 0.0;
    for &(idx, target) in order {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            // one RK4 step of a linear system is multiplication by a fixed matrix
            let ah = a * h;
            let ah2 = ah * ah;
            let step = Matrix4::identity() + ah + ah2 * 0.5 + ah2 * ah / 6.0 + ah2 * ah2 / 24.0;
            for _ in 0..steps {
                x = step * x;
            }
            t = target;
        }
        out[idx] = x;
    }
    out
}

fn rk4_at(
    p: &TwoLevelParams,
    a: &Matrix4<f64>,
    x0: Matrix4x3<f64>,
    taus: &[f64],
    tolerance: f64,
) -> Result<Vec<Matrix4x3<f64>>> {
    let mut order: Vec<(usize, f64)> = taus.iter().map(|t| t.abs()).enumerate().collect();
    order.sort_by(|x, y| x.1.total_cmp(&y.1));
    let fastest = p.gamma() + p.coherence_rate() + p.rabi + p.detuning.abs();
    let h = 0.01 / fastest;
    let coarse = rk4_run(a, x0, &order, h, taus.len());
    let fine = rk4_run(a, x0, &order, 0.5 * h, taus.len());
    let achieved = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (c - f).abs().max())
        .fold(0.0, f64::max);
    if achieved > tolerance {
        return Err(Error::IntegrationTolerance { achieved, tolerance });
    }
    Ok(fine)
}

fn field_from_columns(x: &Matrix4x3<f64>, tau: f64) -> Complex64 {
    // f = re + i·im, G = (f_x + i f_y)/2
    let fx = Complex64::new(x[(0, 0)], x[(0, 1)]);
    let fy = Complex64::new(x[(1, 0)], x[(1, 1)]);
    let g = 0.5 * (fx + Complex64::i() * fy);
    if tau < 0.0 {
        g.conj()
    } else {
        g
    }
}

/// `⟨σ⁺(τ)σ⁻(0)⟩` from the regression theorem; negative delays use
/// `G(−τ) = G(τ)*`.
pub fn field_correlation_oracle(p: &TwoLevelParams, delays: &[f64], prop: Propagator) -> Result<FieldCorrelation> {
    p.validate()?;
    let (init, xs) = propagate(p, delays, prop)?;
    let rho_ee = init.steady.excited_population();
    let values: Vec<Complex64> = xs.iter().zip(delays).map(|(x, &t)| field_from_columns(x, t)).collect();
    let normalized = if rho_ee > 0.0 {
        values.iter().map(|z| z / rho_ee).collect()
    } else {
        // undriven: free dipole decay
        delays
            .iter()
            .map(|&t| {
                let z = Complex64::new(-p.coherence_rate() * t.abs(), p.detuning * t.abs()).exp();
                if t < 0.0 {
                    z.conj()
                } else {
                    z
                }
            })
            .collect()
    };
    Ok(FieldCorrelation {
        delays: delays.to_vec(),
        values,
        coherent_level: init.steady.coherence_sq(),
        excited_population: rho_ee,
        normalized,
    })
}

/// Normalized intensity correlation from the regression theorem.
pub fn g2_oracle(p: &TwoLevelParams, delays: &[f64], prop: Propagator) -> Result<CorrelationTrace> {
    p.validate()?;
    if p.rabi == 0.0 {
        return Err(Error::NoEmission("g2 undefined without drive"));
    }
    let (init, xs) = propagate(p, delays, prop)?;
    g2_from(&init, &xs, delays)
}

fn g2_from(init: &RegressionInit, xs: &[Matrix4x3<f64>], delays: &[f64]) -> Result<CorrelationTrace> {
    let rho_ee = init.steady.excited_population();
    if !(rho_ee > 0.0) {
        return Err(Error::NoEmission("zero steady-state population"));
    }
    let values = xs.iter().map(|x| 0.5 * (x[(2, 2)] + 1.0) / rho_ee).collect();
    Ok(CorrelationTrace::new(delays.to_vec(), values, CorrelationKind::G2))
}

/// Both correlators in one propagation: the unnormalized real field
/// correlation and the normalized intensity correlation.
pub fn correlators_oracle(
    p: &TwoLevelParams,
    delays: &[f64],
    prop: Propagator,
) -> Result<(CorrelationTrace, CorrelationTrace)> {
    p.validate()?;
    if p.rabi == 0.0 {
        return Err(Error::NoEmission("g2 undefined without drive"));
    }
    let (init, xs) = propagate(p, delays, prop)?;
    let g1 = CorrelationTrace::new(
        delays.to_vec(),
        xs.iter()
            .zip(delays)
            .map(|(x, &t)| field_from_columns(x, t).re)
            .collect(),
        CorrelationKind::G1Total,
    );
    let g2 = g2_from(&init, &xs, delays)?;
    Ok((g1, g2))
}

/// Eigenvalues of the homogeneous Bloch generator. On resonance these are
/// `−γ` and `−η ± iμ`.
pub fn generator_eigenvalues(p: &TwoLevelParams) -> [Complex64; 3] {
    let ev = generator(p).complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    out
}

/// Incoherent spectral density per unit angular frequency from the
/// resolvent of the generator, scaled to the emission rate, optionally
/// convolved with a Lorentzian of half width `extra_hwhm` (rad/s).
///
/// `ν` is measured from the laser frequency.
pub fn incoherent_density_oracle(p: &TwoLevelParams, nu: f64, extra_hwhm: f64) -> Result<f64> {
    let ctx = ResolventContext::new(p)?;
    Ok(ctx.density(nu, extra_hwhm))
}

struct ResolventContext {
    m: Matrix3<Complex64>,
    df0: Vector3<Complex64>,
    gamma: f64,
}

impl ResolventContext {
    fn new(p: &TwoLevelParams) -> Result<Self> {
        p.validate()?;
        let ss = steady_state(p)?;
        let rho_ee = ss.excited_population();
        let (sr, si) = ss.sigma_minus();
        let sm = Complex64::new(sr, si);
        let x = ss.to_vector().map(|v| Complex64::new(v, 0.0));
        let f0 = Vector3::new(Complex64::new(rho_ee, 0.0), Complex64::new(0.0, -rho_ee), -sm);
        Ok(ResolventContext {
            m: generator(p).map(|v| Complex64::new(v, 0.0)),
            df0: f0 - x * sm,
            gamma: p.gamma(),
        })
    }

    fn density(&self, nu: f64, extra_hwhm: f64) -> f64 {
        let s = Complex64::new(extra_hwhm, nu);
        let k = Matrix3::from_diagonal_element(s) - self.m;
        let Some(r) = k.lu().solve(&self.df0) else {
            return f64::NAN;
        };
        let g = 0.5 * (r[0] + Complex64::i() * r[1]);
        self.gamma * g.re / PI
    }
}

/// Spectrum at arbitrary detuning from the resolvent, on a linear-frequency
/// grid measured from the laser (Hz). The coherent part is a Lorentzian of
/// the given laser FWHM or a delta when it is zero.
pub fn spectrum_oracle(p: &TwoLevelParams, laser_linewidth_hz: f64, grid_hz: &[f64]) -> Result<SpectrumTrace> {
    spectrum_oracle_broadened(p, laser_linewidth_hz, 0.0, grid_hz)
}

/// As [`spectrum_oracle`], additionally convolved with a unit-area
/// Lorentzian of FWHM `extra_fwhm_hz`.
pub fn spectrum_oracle_broadened(
    p: &TwoLevelParams,
    laser_linewidth_hz: f64,
    extra_fwhm_hz: f64,
    grid_hz: &[f64],
) -> Result<SpectrumTrace> {
    check_grid(grid_hz)?;
    if !(laser_linewidth_hz >= 0.0) || !(extra_fwhm_hz >= 0.0) {
        return Err(Error::invalid("linewidth", "must be >= 0"));
    }
    let ctx = ResolventContext::new(p)?;
    let ss = steady_state(p)?;
    let h = lorentzian_field_decay_rate(extra_fwhm_hz);
    let incoherent: Vec<f64> = grid_hz
        .iter()
        .map(|&f| 2.0 * PI * ctx.density(hz_to_angular(f), h))
        .collect();
    let weight = p.gamma() * ss.coherence_sq();
    let hw = lorentzian_field_decay_rate(laser_linewidth_hz) + h;
    let coherent = if hw > 0.0 {
        CoherentPart::Density(
            grid_hz
                .iter()
                .map(|&f| {
                    let w = hz_to_angular(f);
                    2.0 * PI * weight * hw / (PI * (w * w + hw * hw))
                })
                .collect(),
        )
    } else {
        CoherentPart::Delta { weight }
    };
    Ok(SpectrumTrace::from_parts(grid_hz.to_vec(), coherent, incoherent, None))
}

/// Incoherent spectrum (per Hz, emission-rate scaled) by direct numerical
/// Fourier transform of the sampled regression correlation: composite
/// Simpson quadrature of `(1/π) Re ∫₀^∞ G_inc(τ) e^{−iντ} dτ` on
/// `[0, tau_max]` with `n_steps` (rounded up to even) intervals.
pub fn wiener_khinchin_incoherent(
    p: &TwoLevelParams,
    grid_hz: &[f64],
    tau_max: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    check_grid(grid_hz)?;
    let n = n_steps + n_steps % 2;
    let dt = tau_max / n as f64;
    // repeated multiplication by one exact step propagator
    let init = regression_init(p)?;
    let step = (affine_generator(p) * dt).exp();
    let mut x = initial_columns(&init);
    let coh = init.steady.coherence_sq();
    let mut g = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        g.push(field_from_columns(&x, 0.0) - coh);
        x = step * x;
    }
    let gamma = p.gamma();
    Ok(grid_hz
        .iter()
        .map(|&f| {
            let w = hz_to_angular(f);
            let rot = Complex64::new(0.0, -w * dt).exp();
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, gk) in g.iter().enumerate() {
                let wgt = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += gk * phase * wgt;
                phase *= rot;
            }
            2.0 * PI * gamma * (acc.re * dt / 3.0) / PI
        })
        .collect())
}
