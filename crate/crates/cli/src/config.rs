//! Scenario files.
//!
//! A scenario is a TOML document. Times are in nanoseconds, frequencies in
//! MHz (linear), Rabi frequencies in units of `Γ = 1/T₁`, rates in counts
//! per second. Unknown keys are rejected. Blocks other than `[emitter]` are
//! optional in the file but required by the commands that use them.
//!
//! ```toml
//! [emitter]
//! t1 = 0.76              # ns
//! t2 = 1.52              # ns; or pure_dephasing = <1/ns>
//! rabi = 0.22            # in units of Γ; or power_ratio = P/P_sat
//! detuning = 0.0         # MHz, laser minus transition
//!
//! [instrument]
//! cavity_fwhm = 29.0     # MHz
//! laser_linewidth = 3.0  # MHz
//! setup_visibility = 0.9
//! coherent_tau = 22.0    # ns
//! hbt_irf = { kind = "gaussian", fwhm = 0.4 }   # ns; also "delta", "lorentzian", "tabulated" (path = ...)
//!
//! [background]
//! signal_at_saturation = 1.25e6
//! sbr_at_saturation = 1050.0
//! dark_rate = 150.0
//!
//! [stochastic]
//! duration = 1.7e7       # ns
//! seed = 42
//! segments = 8
//! bin_width = 0.19       # ns
//! max_delay = 76.0       # ns
//! detector = { efficiency = 1.0, dark_rate = 0.0, jitter_fwhm = 0.0, dead_time = 0.0 }
//!
//! [grids]                # all optional
//! spectrum_span = 1000.0 # MHz either side of the laser
//! spectrum_points = 2001
//! g2_max_delay = 15.0    # ns
//! g2_points = 1501
//! g1_max_delay = 80.0    # ns
//! g1_points = 801
//! power_min = 0.01
//! power_max = 10.0
//! power_points = 61
//!
//! [output]
//! dir = "out"
//! format = "csv"         # or "json"
//!
//! [fit]
//! model = "g2_curve"     # fp_spectrum | g2_curve | visibility_curve | sbr_curve
//! data = "out/g2.csv"
//! column = "g2_irf"      # default: second column
//! use_irf = true
//! fixed = { scale = 1.0 }
//! free = [{ name = "t2", initial = 1.0, lower = 0.1, upper = 1.52 }]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use resfluor::instrument::{BackgroundModel, Calibration, InstrumentResponse};
use resfluor::params::rabi_from_power;
use resfluor::stochastic::DetectorModel;
use resfluor::units::{hz_to_angular, MHZ, NS};
use resfluor::TwoLevelParams;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::output::Format;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub emitter: EmitterConfig,
    pub instrument: Option<InstrumentConfig>,
    pub background: Option<BackgroundConfig>,
    pub stochastic: Option<StochasticConfig>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub fit: Option<FitConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub t1: f64,
    pub t2: Option<f64>,
    pub pure_dephasing: Option<f64>,
    pub rabi: Option<f64>,
    pub power_ratio: Option<f64>,
    pub detuning: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub cavity_fwhm: f64,
    pub laser_linewidth: f64,
    pub setup_visibility: f64,
    pub coherent_tau: f64,
    pub hbt_irf: IrfConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IrfConfig {
    Delta,
    Gaussian {
        fwhm: f64,
    },
    Lorentzian {
        fwhm: f64,
    },
    /// Two columns: time (s) and weight.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundConfig {
    pub signal_at_saturation: f64,
    pub sbr_at_saturation: f64,
    pub dark_rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticConfig {
    pub duration: f64,
    pub seed: u64,
    pub segments: usize,
    pub bin_width: f64,
    pub max_delay: f64,
    pub detector: DetectorConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_rate: f64,
    pub jitter_fwhm: f64,
    pub dead_time: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub spectrum_span: f64,
    pub spectrum_points: usize,
    pub g2_max_delay: f64,
    pub g2_points: usize,
    pub g1_max_delay: f64,
    pub g1_points: usize,
    pub power_min: f64,
    pub power_max: f64,
    pub power_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            spectrum_span: 1000.0,
            spectrum_points: 2001,
            g2_max_delay: 15.0,
            g2_points: 1501,
            g1_max_delay: 80.0,
            g1_points: 801,
            power_min: 0.01,
            power_max: 10.0,
            power_points: 61,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: resfluor::fitting::ModelKind,
    pub data: PathBuf,
    pub column: Option<String>,
    pub sigma_column: Option<String>,
    #[serde(default)]
    pub use_irf: bool,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub free: Vec<FreeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeConfig {
    pub name: String,
    pub initial: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// The scenario the `repro` command uses when no file is given.
pub const PUBLISHED_SCENARIO: &str = include_str!("../scenarios/published.toml");

impl ScenarioConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> CliResult<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn published() -> Self {
        Self::from_toml(PUBLISHED_SCENARIO, ".").expect("bundled scenario is valid")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn check(&self) -> CliResult<()> {
        self.emitter_params()?;
        if let Some(i) = &self.instrument {
            i.check()?;
            if let IrfConfig::Tabulated { path } = &i.hbt_irf {
                let full = self.resolve(path);
                if !full.is_file() {
                    return Err(CliError::config(format!(
                        "hbt_irf file {} does not exist",
                        full.display()
                    )));
                }
            }
        }
        if let Some(b) = &self.background {
            positive("background.signal_at_saturation", b.signal_at_saturation)?;
            positive("background.sbr_at_saturation", b.sbr_at_saturation)?;
            non_negative("background.dark_rate", b.dark_rate)?;
        }
        if let Some(s) = &self.stochastic {
            positive("stochastic.duration", s.duration)?;
            positive("stochastic.bin_width", s.bin_width)?;
            positive("stochastic.max_delay", s.max_delay)?;
            if s.segments == 0 {
                return Err(CliError::config("stochastic.segments must be at least 1"));
            }
            s.detector()
                .validate()
                .map_err(|e| CliError::config(format!("stochastic.detector: {e}")))?;
        }
        let g = &self.grids;
        positive("grids.spectrum_span", g.spectrum_span)?;
        positive("grids.g2_max_delay", g.g2_max_delay)?;
        positive("grids.g1_max_delay", g.g1_max_delay)?;
        positive("grids.power_min", g.power_min)?;
        if g.power_max.is_nan() || g.power_max <= g.power_min {
            return Err(CliError::config("grids.power_max must exceed grids.power_min"));
        }
        for (name, n) in [
            ("grids.spectrum_points", g.spectrum_points),
            ("grids.g2_points", g.g2_points),
            ("grids.g1_points", g.g1_points),
            ("grids.power_points", g.power_points),
        ] {
            if n < 2 {
                return Err(CliError::config(format!("{name} must be at least 2")));
            }
        }
        if let Some(f) = &self.fit {
            let full = self.resolve(&f.data);
            if !full.is_file() {
                return Err(CliError::config(format!(
                    "fit data file {} does not exist",
                    full.display()
                )));
            }
        }
        Ok(())
    }

    /// Lifetime and coherence time (s).
    fn lifetimes(&self) -> CliResult<(f64, f64)> {
        let e = &self.emitter;
        positive("emitter.t1", e.t1)?;
        let t1 = e.t1 * NS;
        let t2 = match (e.t2, e.pure_dephasing) {
            (Some(t2), None) => {
                positive("emitter.t2", t2)?;
                t2 * NS
            }
            (None, Some(gd)) => {
                non_negative("emitter.pure_dephasing", gd)?;
                1.0 / (0.5 / t1 + gd / NS)
            }
            _ => {
                return Err(CliError::config(
                    "emitter: give exactly one of `t2` and `pure_dephasing`",
                ))
            }
        };
        Ok((t1, t2))
    }

    /// Rabi frequency (rad/s) from whichever of `rabi` and `power_ratio` is given.
    pub fn rabi(&self) -> CliResult<f64> {
        let (t1, t2) = self.lifetimes()?;
        match (self.emitter.rabi, self.emitter.power_ratio) {
            (Some(r), None) => {
                non_negative("emitter.rabi", r)?;
                Ok(r / t1)
            }
            (None, Some(p)) => {
                non_negative("emitter.power_ratio", p)?;
                rabi_from_power(p, t1, t2).map_err(|e| CliError::config(format!("emitter: {e}")))
            }
            _ => Err(CliError::config(
                "emitter: give exactly one of `rabi` and `power_ratio`",
            )),
        }
    }

    pub fn emitter_params(&self) -> CliResult<TwoLevelParams> {
        let (t1, t2) = self.lifetimes()?;
        finite("emitter.detuning", self.emitter.detuning)?;
        TwoLevelParams::new(t1, t2, self.rabi()?)
            .and_then(|p| p.with_detuning(hz_to_angular(self.emitter.detuning * MHZ)))
            .map_err(|e| CliError::config(format!("emitter: {e}")))
    }

    /// The emitter at the same lifetimes with the Rabi frequency `x·Γ`.
    pub fn emitter_at(&self, rabi_over_gamma: f64) -> CliResult<TwoLevelParams> {
        let p = self.emitter_params()?;
        p.with_rabi(rabi_over_gamma / p.t1).map_err(CliError::from)
    }

    /// Emitter driven at saturation, `P = P_sat`.
    pub fn saturation_params(&self) -> CliResult<TwoLevelParams> {
        let (t1, t2) = self.lifetimes()?;
        let rabi = rabi_from_power(1.0, t1, t2)?;
        Ok(TwoLevelParams::new(t1, t2, rabi)?)
    }

    pub fn power_ratio(&self) -> CliResult<f64> {
        match self.emitter.power_ratio {
            Some(p) => Ok(p),
            None => {
                let p = self.emitter_params()?;
                Ok(resfluor::params::power_from_rabi(p.rabi, p.t1, p.t2))
            }
        }
    }

    pub fn instrument(&self, command: &str) -> CliResult<&InstrumentConfig> {
        self.instrument
            .as_ref()
            .ok_or_else(|| CliError::config(format!("`{command}` needs an [instrument] block")))
    }

    pub fn stochastic(&self, command: &str) -> CliResult<&StochasticConfig> {
        self.stochastic
            .as_ref()
            .ok_or_else(|| CliError::config(format!("`{command}` needs a [stochastic] block")))
    }

    pub fn calibration(&self, command: &str) -> CliResult<Calibration> {
        let b = self
            .background
            .as_ref()
            .ok_or_else(|| CliError::config(format!("`{command}` needs a [background] block")))?;
        Ok(BackgroundModel::calibrate(
            &self.saturation_params()?,
            b.signal_at_saturation,
            b.sbr_at_saturation,
            b.dark_rate,
        )?)
    }

    pub fn hbt_irf(&self, command: &str) -> CliResult<InstrumentResponse> {
        let irf = match &self.instrument(command)?.hbt_irf {
            IrfConfig::Delta => InstrumentResponse::Delta,
            IrfConfig::Gaussian { fwhm } => InstrumentResponse::gaussian(fwhm * NS)?,
            IrfConfig::Lorentzian { fwhm } => InstrumentResponse::lorentzian(fwhm * NS)?,
            IrfConfig::Tabulated { path } => {
                let full = self.resolve(path);
                let text = std::fs::read_to_string(&full).map_err(|e| CliError::io(&full, e))?;
                InstrumentResponse::parse_tabulated(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", full.display())))?
            }
        };
        Ok(irf)
    }
}

impl InstrumentConfig {
    fn check(&self) -> CliResult<()> {
        positive("instrument.cavity_fwhm", self.cavity_fwhm)?;
        non_negative("instrument.laser_linewidth", self.laser_linewidth)?;
        positive("instrument.coherent_tau", self.coherent_tau)?;
        if !(self.setup_visibility > 0.0 && self.setup_visibility <= 1.0) {
            return Err(CliError::config("instrument.setup_visibility must lie in (0, 1]"));
        }
        match self.hbt_irf {
            IrfConfig::Gaussian { fwhm } | IrfConfig::Lorentzian { fwhm } => positive("instrument.hbt_irf.fwhm", fwhm),
            _ => Ok(()),
        }
    }
}

impl StochasticConfig {
    pub fn detector(&self) -> DetectorModel {
        DetectorModel {
            efficiency: self.detector.efficiency,
            dark_rate: self.detector.dark_rate,
            jitter_fwhm: self.detector.jitter_fwhm * NS,
            dead_time: self.detector.dead_time * NS,
        }
    }
}

fn finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[emitter]\nt1 = 0.76\nt2 = 1.52\nrabi = 0.22\ndetuning = 0.0\n";

    #[test]
    fn published_scenario_loads() {
        let c = ScenarioConfig::published();
        let p = c.emitter_params().unwrap();
        assert!((p.t1 - 760e-12).abs() < 1e-24);
        assert!((p.rabi * p.t1 - 0.22).abs() < 1e-12);
        assert!(c.instrument.is_some() && c.background.is_some());
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = MINIMAL.replace("detuning", "detunning");
        let err = ScenarioConfig::from_toml(&text, ".").unwrap_err();
        let msg = err.to_string();
        assert_eq!(err.exit_code(), 2);
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("detunning"), "{msg}");
    }

    #[test]
    fn unknown_block_rejected() {
        let text = format!("{MINIMAL}[extras]\nfoo = 1\n");
        assert!(ScenarioConfig::from_toml(&text, ".").is_err());
    }

    #[test]
    fn drive_must_be_given_once() {
        let both = MINIMAL.replace("rabi = 0.22", "rabi = 0.22\npower_ratio = 0.1");
        assert!(ScenarioConfig::from_toml(&both, ".").is_err());
        let none = MINIMAL.replace("rabi = 0.22\n", "");
        assert!(ScenarioConfig::from_toml(&none, ".").is_err());
    }

    #[test]
    fn physical_parameters_have_no_defaults() {
        let text = MINIMAL.replace("detuning = 0.0\n", "");
        assert!(ScenarioConfig::from_toml(&text, ".").is_err());
    }

    #[test]
    fn pure_dephasing_and_power_forms() {
        let text = MINIMAL
            .replace("t2 = 1.52", "pure_dephasing = 0.0")
            .replace("rabi = 0.22", "power_ratio = 1.0");
        let c = ScenarioConfig::from_toml(&text, ".").unwrap();
        let p = c.emitter_params().unwrap();
        assert!((p.t2 - 1.52e-9).abs() < 1e-21);
        // saturation: Ω = Γ/√2 at T₂ = 2T₁
        assert!((p.rabi * p.t1 - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn t2_above_limit_is_config_error() {
        let text = MINIMAL.replace("t2 = 1.52", "t2 = 1.6");
        let err = ScenarioConfig::from_toml(&text, ".").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_irf_file() {
        let text = format!(
            "{MINIMAL}[instrument]\ncavity_fwhm = 29.0\nlaser_linewidth = 3.0\nsetup_visibility = 0.9\ncoherent_tau = 22.0\nhbt_irf = {{ kind = \"tabulated\", path = \"nope.csv\" }}\n"
        );
        assert!(ScenarioConfig::from_toml(&text, "/nonexistent")
            .unwrap_err()
            .to_string()
            .contains("nope.csv"));
    }

    #[test]
    fn irf_kind_fields_are_strict() {
        let text = format!(
            "{MINIMAL}[instrument]\ncavity_fwhm = 29.0\nlaser_linewidth = 3.0\nsetup_visibility = 0.9\ncoherent_tau = 22.0\nhbt_irf = {{ kind = \"gaussian\", fwhm = 0.4, sigma = 1.0 }}\n"
        );
        assert!(ScenarioConfig::from_toml(&text, ".").is_err());
    }
}
