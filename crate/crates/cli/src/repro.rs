//! The figure-data bundle: power dependence, cavity spectra, intensity
//! correlations and fringe visibility at the published drive strengths,
//! plus a `summary.json` of the derived numbers.

use std::path::PathBuf;

use resfluor::fitting::lm::{levenberg_marquardt, LmOptions};
use resfluor::mollow::{coherent_fraction, line_spectrum};
use resfluor::oracle::generator_eigenvalues;
use resfluor::units::{angular_to_hz, coherence_linewidth_convert, Conversion, GHZ, MHZ, NS};
use serde::Serialize;

use crate::commands::{g2_table, sbr_table, spectrum_table, visibility_table, Context};
use crate::config::ScenarioConfig;
use crate::error::CliResult;
use crate::output::{write_atomic, write_table};

/// Drive strengths (units of Γ) of the three spectra and correlations.
pub const SPECTRUM_DRIVES: [(&str, f64); 3] = [("a", 1.5), ("b", 0.6), ("c", 0.22)];
pub const CORRELATION_DRIVES: [(&str, f64); 3] = [("d", 1.5), ("e", 0.6), ("f", 0.22)];
pub const VISIBILITY_DRIVES: [f64; 2] = [0.22, 0.17];
/// Laser-to-transition detuning of the background-only scan.
pub const BACKGROUND_DETUNING: f64 = 35.0 * GHZ;

#[derive(Debug, Clone, Serialize)]
pub struct FractionSummary {
    pub rabi: f64,
    pub coherent: f64,
    pub incoherent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinewidthSummary {
    pub natural_fwhm_mhz: f64,
    pub coherent_fwhm_mhz: f64,
    pub reduction: f64,
    pub laser_coherence_ns: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SidebandSummary {
    pub rabi: f64,
    /// Imaginary part of the damped Bloch eigenvalue pair over 2π.
    pub eigenfrequency_mhz: f64,
    /// Centres of the side poles in the analytic spectrum.
    pub pole_centers_mhz: [f64; 2],
    /// Whether the recorded scan has maxima away from the centre.
    pub resolved_maxima: bool,
    /// Positive detuning where the slope of the incoherent scan is flattest.
    pub shoulder_mhz: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakSummary {
    pub rabi: f64,
    pub fitted_fwhm_mhz: f64,
    pub cavity_fwhm_mhz: f64,
    pub local_maxima: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilitySummary {
    pub rabi: f64,
    pub zero_delay: f64,
    /// Tail fitted over delays ≥ 10 ns as `a·exp(−τ/(2τc))`.
    pub tail_coherence_ns: f64,
    pub tail_amplitude: f64,
    /// Time constant of a single exponential fitted to the excess over
    /// the extrapolated tail.
    pub transient_ns: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackgroundSummary {
    pub collection_efficiency: f64,
    pub leakage_per_power: f64,
    pub dark_rate: f64,
    pub background_at_saturation: f64,
    pub background_fraction: f64,
    pub leakage_crossover: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproSummary {
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub fractions: Vec<FractionSummary>,
    pub linewidth: LinewidthSummary,
    pub sidebands: SidebandSummary,
    pub resolution_limited_peak: PeakSummary,
    pub visibility: Vec<VisibilitySummary>,
    pub background: BackgroundSummary,
    /// Published numbers this model is not expected to reproduce.
    pub not_modelled: Vec<&'static str>,
    pub files: Vec<String>,
}

fn count_local_maxima(y: &[f64]) -> usize {
    y.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

/// Fits `a·h² / ((x − x0)² + h²) + c` and returns the FWHM `2h`.
fn lorentzian_fwhm(x: &[f64], y: &[f64]) -> f64 {
    let peak = y.iter().cloned().fold(f64::MIN, f64::max);
    let floor = y.iter().cloned().fold(f64::MAX, f64::min);
    let x_scale = (x[x.len() - 1] - x[0]).abs().max(1.0);
    let model = |p: &[f64]| -> resfluor::Result<Vec<f64>> {
        Ok(x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let d = xi / x_scale - p[1];
                p[0] * p[2] * p[2] / (d * d + p[2] * p[2]) + p[3] - yi / peak
            })
            .collect())
    };
    let x0 = [1.0 - floor / peak, 0.0, 0.01, floor / peak];
    let lo = [0.0, -1.0, 1e-6, -1.0];
    let hi = [10.0, 1.0, 1.0, 1.0];
    let out = levenberg_marquardt(model, &x0, &lo, &hi, &LmOptions::default()).expect("finite model");
    2.0 * out.x[2] * x_scale
}

fn visibility_summary(rabi: f64, delay_ns: &[f64], v: &[f64]) -> VisibilitySummary {
    // log-linear tail fit
    let tail: Vec<(f64, f64)> = delay_ns
        .iter()
        .zip(v)
        .filter(|(d, v)| **d >= 10.0 && **v > 0.0)
        .map(|(d, v)| (*d, v.ln()))
        .collect();
    let n = tail.len() as f64;
    let (sx, sy) = tail.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let amplitude = (my - slope * mx).exp();
    let tail_at = |d: f64| amplitude * (slope * d).exp();
    // single exponential through the excess over the tail, τ < 10 ns
    let pts: Vec<(f64, f64)> = delay_ns
        .iter()
        .zip(v)
        .filter(|(d, _)| **d < 10.0)
        .map(|(d, v)| (*d, v - tail_at(*d)))
        .collect();
    let excess0 = pts[0].1;
    let model = |p: &[f64]| -> resfluor::Result<Vec<f64>> {
        Ok(pts
            .iter()
            .map(|(d, e)| (p[0] * (-d / p[1]).exp() - e) / excess0)
            .collect())
    };
    let transient_ns = if excess0 > 0.0 {
        levenberg_marquardt(
            model,
            &[excess0, 1.0],
            &[0.0, 1e-3],
            &[1.0, 10.0],
            &LmOptions::default(),
        )
        .map_or(f64::NAN, |o| o.x[1])
    } else {
        f64::NAN
    };
    VisibilitySummary {
        rabi,
        zero_delay: v[0],
        tail_coherence_ns: -0.5 / slope,
        tail_amplitude: amplitude,
        transient_ns,
    }
}

pub fn repro(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<(Vec<PathBuf>, ReproSummary)> {
    let inst = cfg.instrument("repro")?;
    let cal = cfg.calibration("repro")?;
    let base = cfg.emitter_params()?;
    let mut files = Vec::new();

    files.push(write_table(&ctx.out, "fig1d_sbr", &sbr_table(cfg)?, ctx.format)?);

    let mut sidebands = None;
    let mut peak = None;
    for (panel, x) in SPECTRUM_DRIVES {
        let p = cfg.emitter_at(x)?;
        let power = resfluor::params::power_from_rabi(p.rabi, p.t1, p.t2);
        let t = spectrum_table(cfg, &p, power)?;
        let nu = t.column("detuning_mhz").expect("column").to_vec();
        let counts = t.column("counts").expect("column").to_vec();
        if panel == "a" {
            let ev = generator_eigenvalues(&p);
            let mu = angular_to_hz(ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max)) / MHZ;
            let lines = line_spectrum(&p, 0.0)?;
            let mut centers: Vec<f64> = lines
                .incoherent
                .iter()
                .filter(|l| l.center != 0.0)
                .map(|l| angular_to_hz(l.center) / MHZ)
                .collect();
            centers.sort_by(f64::total_cmp);
            let inc = t.column("incoherent").expect("column");
            let slope: Vec<f64> = inc.windows(3).map(|w| (w[2] - w[0]).abs()).collect();
            let shoulder = (1..slope.len() - 1)
                .filter(|&i| nu[i + 1] > inst.cavity_fwhm && slope[i] < slope[i - 1] && slope[i] <= slope[i + 1])
                .map(|i| nu[i + 1])
                .next();
            let central = counts.len() / 2;
            let outer: Vec<f64> = counts[central + 1..].to_vec();
            sidebands = Some(SidebandSummary {
                rabi: x,
                eigenfrequency_mhz: mu,
                pole_centers_mhz: [
                    centers.first().copied().unwrap_or(f64::NAN),
                    centers.last().copied().unwrap_or(f64::NAN),
                ],
                resolved_maxima: count_local_maxima(&outer) > 0,
                shoulder_mhz: shoulder,
            });
            let bg_params = p.with_detuning(2.0 * std::f64::consts::PI * BACKGROUND_DETUNING)?;
            let bg = spectrum_table(cfg, &bg_params, power)?;
            files.push(write_table(&ctx.out, "fig2a_background", &bg, ctx.format)?);
        }
        if panel == "c" {
            peak = Some(PeakSummary {
                rabi: x,
                fitted_fwhm_mhz: lorentzian_fwhm(&nu, &counts),
                cavity_fwhm_mhz: inst.cavity_fwhm,
                local_maxima: count_local_maxima(&counts),
            });
        }
        files.push(write_table(&ctx.out, &format!("fig2{panel}_spectrum"), &t, ctx.format)?);
    }

    for (panel, x) in CORRELATION_DRIVES {
        let t = g2_table(cfg, &cfg.emitter_at(x)?)?;
        files.push(write_table(&ctx.out, &format!("fig2{panel}_g2"), &t, ctx.format)?);
    }

    let vis_params = VISIBILITY_DRIVES
        .iter()
        .map(|&x| cfg.emitter_at(x))
        .collect::<CliResult<Vec<_>>>()?;
    let vis = visibility_table(cfg, &vis_params, &["rabi_0.22", "rabi_0.17"])?;
    let delay_ns = vis.column("delay_ns").expect("column").to_vec();
    let visibility = VISIBILITY_DRIVES
        .iter()
        .zip(["rabi_0.22", "rabi_0.17"])
        .map(|(&x, name)| visibility_summary(x, &delay_ns, vis.column(name).expect("column")))
        .collect();
    files.push(write_table(&ctx.out, "fig3a_visibility", &vis, ctx.format)?);

    let fractions = VISIBILITY_DRIVES
        .iter()
        .map(|&x| {
            let f = coherent_fraction(&cfg.emitter_at(x)?)?;
            Ok(FractionSummary {
                rabi: x,
                coherent: f.value,
                incoherent: f.incoherent(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let natural = 1.0 / (2.0 * std::f64::consts::PI * base.t1) / MHZ;
    let coherent_fwhm = coherence_linewidth_convert(inst.coherent_tau * NS, Conversion::TimeToLinewidth)? / MHZ;
    let laser_coherence_ns = if inst.laser_linewidth > 0.0 {
        coherence_linewidth_convert(inst.laser_linewidth * MHZ, Conversion::LinewidthToTime)? / NS
    } else {
        f64::INFINITY
    };

    let mut summary = ReproSummary {
        t1_ns: base.t1 / NS,
        t2_ns: base.t2 / NS,
        fractions,
        linewidth: LinewidthSummary {
            natural_fwhm_mhz: natural,
            coherent_fwhm_mhz: coherent_fwhm,
            reduction: natural / coherent_fwhm,
            laser_coherence_ns,
        },
        sidebands: sidebands.expect("panel a computed"),
        resolution_limited_peak: peak.expect("panel c computed"),
        visibility,
        background: BackgroundSummary {
            collection_efficiency: cal.model.collection_efficiency,
            leakage_per_power: cal.model.leakage_per_power,
            dark_rate: cal.model.dark_rate,
            background_at_saturation: cal.background_at_saturation,
            background_fraction: cal.background_fraction,
            leakage_crossover: cal.leakage_crossover,
        },
        not_modelled: vec![
            "530 MHz power-broadened linewidth at saturation (spectral fluctuation)",
            "85% of laser visibility at 2.6 ns delay (setup imperfection)",
        ],
        files: Vec::new(),
    };
    let summary_path = ctx.out.join("summary.json");
    files.push(summary_path.clone());
    summary.files = files
        .iter()
        .map(|p| p.file_name().expect("file").to_string_lossy().into_owned())
        .collect();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_atomic(&summary_path, json.as_bytes())?;
    Ok((files, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_width_recovered() {
        let x: Vec<f64> = (0..401).map(|i| -200.0 + i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 5.0 * 14.5f64.powi(2) / (v * v + 14.5f64.powi(2)) + 0.3)
            .collect();
        assert!((lorentzian_fwhm(&x, &y) - 29.0).abs() < 1e-4);
    }

    #[test]
    fn tail_and_transient() {
        let d: Vec<f64> = (0..801).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = d
            .iter()
            .map(|t| 0.8 * (-t / 44.0).exp() + 0.1 * (-t / 1.5).exp())
            .collect();
        let s = visibility_summary(0.22, &d, &v);
        assert!((s.tail_coherence_ns - 22.0).abs() < 0.01);
        assert!((s.transient_ns - 1.5).abs() < 0.05);
    }
}
