//! One function per subcommand. Each writes its files under the output
//! directory and returns their paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use resfluor::correlation::linspace;
use resfluor::fitting::{fit, input_digest, FitProblem, FitReport, FreeParam, ModelKind, Param};
use resfluor::instrument::{fp_scan, irf_convolve_correlation, michelson_visibility, sbr_curves};
use resfluor::mollow::g2_closed;
use resfluor::oracle::{g2_oracle, Propagator};
use resfluor::stochastic::{apply_detector, derive_seed, g2_histogram, hbt_split, simulate_segments, PhotonStream};
use resfluor::units::{coherence_linewidth_convert, Conversion, MHZ, NS};
use resfluor::{CorrelationTrace, TwoLevelParams};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, write_table, Format, Table};

/// Where and how a command writes.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub format: Format,
    /// Overrides `stochastic.seed`.
    pub seed: Option<u64>,
}

/// Stream ids for [`derive_seed`] beyond the per-segment ones.
const SPLIT_STREAM: u64 = 1 << 32;
const DETECTOR_A: u64 = SPLIT_STREAM + 1;
const DETECTOR_B: u64 = SPLIT_STREAM + 2;

pub const STREAM_A: &str = "stream_a.txt";
pub const STREAM_B: &str = "stream_b.txt";

fn to_ns(v: &[f64]) -> Vec<f64> {
    v.iter().map(|t| t / NS).collect()
}

fn to_mhz(v: &[f64]) -> Vec<f64> {
    v.iter().map(|f| f / MHZ).collect()
}

/// Cavity scan of the emission, counts/s against detuning.
pub fn spectrum_table(cfg: &ScenarioConfig, p: &TwoLevelParams, power_ratio: f64) -> CliResult<Table> {
    let inst = cfg.instrument("spectrum")?;
    let cal = cfg.calibration("spectrum")?;
    let span = cfg.grids.spectrum_span * MHZ;
    let grid = linspace(-span, span, cfg.grids.spectrum_points);
    let scan = fp_scan(
        p,
        inst.laser_linewidth * MHZ,
        inst.cavity_fwhm * MHZ,
        &grid,
        &cal.model,
        power_ratio,
    )?;
    let c = scan.components.expect("fp_scan reports components");
    Ok(Table::new()
        .with("detuning_mhz", to_mhz(&scan.scan_axis))
        .with("counts", scan.counts)
        .with("coherent", c.coherent)
        .with("incoherent", c.incoherent)
        .with("leakage", c.leakage)
        .with("dark", c.dark))
}

pub fn spectrum(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let t = spectrum_table(cfg, &cfg.emitter_params()?, cfg.power_ratio()?)?;
    Ok(vec![write_table(&ctx.out, "spectrum", &t, ctx.format)?])
}

fn laser_tau(linewidth_mhz: f64) -> CliResult<f64> {
    if linewidth_mhz == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(coherence_linewidth_convert(
        linewidth_mhz * MHZ,
        Conversion::LinewidthToTime,
    )?)
}

/// Fringe visibility of the emission and of the laser against delay.
pub fn visibility_table(cfg: &ScenarioConfig, params: &[TwoLevelParams], labels: &[&str]) -> CliResult<Table> {
    let inst = cfg.instrument("g1")?;
    let delays = linspace(0.0, cfg.grids.g1_max_delay * NS, cfg.grids.g1_points);
    let tau_l = laser_tau(inst.laser_linewidth)?;
    let mut t = Table::new().with("delay_ns", to_ns(&delays));
    for (p, label) in params.iter().zip(labels) {
        let v = michelson_visibility(p, tau_l, inst.coherent_tau * NS, inst.setup_visibility, &delays)?;
        t = t.with(label, v.values);
    }
    let laser = delays
        .iter()
        .map(|d| inst.setup_visibility * (-d / (2.0 * tau_l)).exp())
        .collect();
    Ok(t.with("laser", laser))
}

pub fn g1(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let t = visibility_table(cfg, &[cfg.emitter_params()?], &["visibility"])?;
    Ok(vec![write_table(&ctx.out, "g1", &t, ctx.format)?])
}

/// Ideal and instrument-convolved `g²` against delay.
pub fn g2_table(cfg: &ScenarioConfig, p: &TwoLevelParams) -> CliResult<Table> {
    let delays = linspace(0.0, cfg.grids.g2_max_delay * NS, cfg.grids.g2_points);
    let raw: CorrelationTrace = if p.is_resonant() {
        g2_closed(p, &delays)?
    } else {
        g2_oracle(p, &delays, Propagator::default())?
    };
    let view = irf_convolve_correlation(&raw, &cfg.hbt_irf("g2")?)?;
    Ok(Table::new()
        .with("delay_ns", to_ns(&delays))
        .with("g2", view.raw.values)
        .with("g2_irf", view.observed.values))
}

pub fn g2(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let t = g2_table(cfg, &cfg.emitter_params()?)?;
    Ok(vec![write_table(&ctx.out, "g2", &t, ctx.format)?])
}

/// Simulated emission split onto two detectors.
pub fn simulate_hbt(cfg: &ScenarioConfig, seed: u64) -> CliResult<(PhotonStream, PhotonStream)> {
    let st = cfg.stochastic("stream")?;
    let p = cfg.emitter_params()?;
    let duration = st.duration * NS;
    let seg = duration / st.segments as f64;
    let segments = simulate_segments(&p, seg, seed, st.segments)?;
    // segments restart from the ground state, as after an emission
    let mut times = Vec::with_capacity(segments.iter().map(PhotonStream::len).sum());
    for (k, s) in segments.iter().enumerate() {
        let offset = k as f64 * seg;
        for &t in &s.timestamps {
            let mut t = offset + t;
            if let Some(&last) = times.last() {
                if t <= last {
                    t = f64::next_up(last);
                }
            }
            if t < duration {
                times.push(t);
            }
        }
    }
    let emitted = PhotonStream::new(times, duration, "emitted")?.with_seed(seed);
    let (a, b) = hbt_split(&emitted, derive_seed(seed, SPLIT_STREAM))?;
    let det = st.detector();
    let a = apply_detector(&a, &det, derive_seed(seed, DETECTOR_A))?;
    let b = apply_detector(&b, &det, derive_seed(seed, DETECTOR_B))?;
    Ok((a.with_seed(seed), b.with_seed(seed)))
}

pub fn stream(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let seed = ctx.seed.unwrap_or(cfg.stochastic("stream")?.seed);
    let (a, b) = simulate_hbt(cfg, seed)?;
    let mut paths = Vec::new();
    for (s, name) in [(a, STREAM_A), (b, STREAM_B)] {
        let path = ctx.out.join(name);
        write_atomic(&path, s.to_text().as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

fn load_stream(path: &Path) -> CliResult<PhotonStream> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    PhotonStream::read_from(file).map_err(|e| match e {
        resfluor::Error::Io(io) => CliError::io(path, io),
        other => CliError::Model(other),
    })
}

pub fn histogram_table(cfg: &ScenarioConfig, a: &PhotonStream, b: &PhotonStream) -> CliResult<Table> {
    let st = cfg.stochastic("hist")?;
    let h = g2_histogram(a, b, st.bin_width * NS, st.max_delay * NS)?;
    Ok(Table::new()
        .with("delay_ns", to_ns(&h.centers()))
        .with("counts", h.counts.iter().map(|&c| c as f64).collect())
        .with("expected", h.expected.clone())
        .with("normalized", h.normalized.clone()))
}

/// Histograms two stream files, by default those `stream` wrote.
pub fn hist(cfg: &ScenarioConfig, ctx: &Context, inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let (pa, pb) = match inputs {
        [] => (ctx.out.join(STREAM_A), ctx.out.join(STREAM_B)),
        [a, b] => (a.clone(), b.clone()),
        _ => return Err(CliError::config("`hist` takes either no stream files or exactly two")),
    };
    let t = histogram_table(cfg, &load_stream(&pa)?, &load_stream(&pb)?)?;
    Ok(vec![write_table(&ctx.out, "hist", &t, ctx.format)?])
}

pub fn sbr_table(cfg: &ScenarioConfig) -> CliResult<Table> {
    let cal = cfg.calibration("sbr")?;
    let g = &cfg.grids;
    let ratio = (g.power_max / g.power_min).ln();
    let power: Vec<f64> = (0..g.power_points)
        .map(|i| g.power_min * (ratio * i as f64 / (g.power_points - 1) as f64).exp())
        .collect();
    let c = sbr_curves(&power, &cfg.saturation_params()?, &cal.model)?;
    Ok(Table::new()
        .with("power_ratio", c.power)
        .with("signal", c.signal)
        .with("background", c.background)
        .with("sbr", c.sbr))
}

pub fn sbr(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    Ok(vec![write_table(&ctx.out, "sbr", &sbr_table(cfg)?, ctx.format)?])
}

/// Factor taking a parameter from scenario units to SI.
fn unit_factor(p: Param, t1: f64) -> f64 {
    match p {
        Param::T1 | Param::T2 | Param::CoherentTau => NS,
        Param::Rabi => 1.0 / t1,
        Param::LaserLinewidth | Param::CavityFwhm => MHZ,
        Param::Scale | Param::Offset | Param::LeakagePerPower | Param::DarkRate => 1.0,
    }
}

fn unit_name(p: Param) -> &'static str {
    match p {
        Param::T1 | Param::T2 | Param::CoherentTau => "ns",
        Param::Rabi => "gamma",
        Param::LaserLinewidth | Param::CavityFwhm => "MHz",
        Param::LeakagePerPower | Param::DarkRate => "counts/s",
        Param::Scale | Param::Offset => "1",
    }
}

/// Value a model parameter takes from the scenario when the fit block
/// neither fixes nor frees it.
fn scenario_value(cfg: &ScenarioConfig, p: Param, model: ModelKind) -> CliResult<Option<f64>> {
    let e = cfg.emitter_params()?;
    Ok(match p {
        Param::T1 => Some(e.t1),
        Param::T2 => Some(e.t2),
        Param::Rabi => Some(e.rabi),
        Param::LaserLinewidth => cfg.instrument.as_ref().map(|i| i.laser_linewidth * MHZ),
        Param::CavityFwhm => cfg.instrument.as_ref().map(|i| i.cavity_fwhm * MHZ),
        Param::CoherentTau => cfg.instrument.as_ref().map(|i| i.coherent_tau * NS),
        Param::Scale => match model {
            ModelKind::VisibilityCurve => cfg.instrument.as_ref().map(|i| i.setup_visibility),
            ModelKind::FpSpectrum | ModelKind::SbrCurve if cfg.background.is_some() => {
                Some(cfg.calibration("fit")?.model.collection_efficiency)
            }
            _ => None,
        },
        Param::Offset | Param::DarkRate => cfg.background.as_ref().map(|b| b.dark_rate),
        Param::LeakagePerPower if cfg.background.is_some() => Some(cfg.calibration("fit")?.model.leakage_per_power),
        Param::LeakagePerPower => None,
    })
}

pub fn fit_problem(cfg: &ScenarioConfig) -> CliResult<FitProblem> {
    let f = cfg
        .fit
        .as_ref()
        .ok_or_else(|| CliError::config("`fit` needs a [fit] block"))?;
    let t1 = cfg.emitter_params()?.t1;
    let data = Table::load(&cfg.resolve(&f.data))?;
    let first = data
        .columns
        .first()
        .ok_or_else(|| CliError::config("fit data has no columns"))?;
    let x_factor = match f.model {
        ModelKind::FpSpectrum => MHZ,
        ModelKind::G2Curve | ModelKind::VisibilityCurve => NS,
        ModelKind::SbrCurve => 1.0,
    };
    let grid: Vec<f64> = first.values.iter().map(|x| x * x_factor).collect();
    let y_name = match &f.column {
        Some(c) => c.clone(),
        None => data
            .columns
            .get(1)
            .map(|c| c.name.clone())
            .ok_or_else(|| CliError::config("fit data needs a value column"))?,
    };
    let values = data
        .column(&y_name)
        .ok_or_else(|| CliError::config(format!("fit data has no column `{y_name}`")))?
        .to_vec();
    let sigma = match &f.sigma_column {
        Some(c) => Some(
            data.column(c)
                .ok_or_else(|| CliError::config(format!("fit data has no column `{c}`")))?
                .to_vec(),
        ),
        None => None,
    };

    let mut free = Vec::new();
    for fc in &f.free {
        let p: Param = fc
            .name
            .parse()
            .map_err(|e| CliError::config(format!("fit.free: {e}")))?;
        let k = unit_factor(p, t1);
        free.push(FreeParam::new(
            p,
            fc.initial * k,
            fc.lower.map_or(f64::NEG_INFINITY, |v| v * k),
            fc.upper.map_or(f64::INFINITY, |v| v * k),
        ));
    }
    let mut fixed = BTreeMap::new();
    for (name, v) in &f.fixed {
        let p: Param = name.parse().map_err(|e| CliError::config(format!("fit.fixed: {e}")))?;
        fixed.insert(p, v * unit_factor(p, t1));
    }
    for &p in f.model.parameters() {
        if fixed.contains_key(&p) || free.iter().any(|q| q.name == p) {
            continue;
        }
        match scenario_value(cfg, p, f.model)? {
            Some(v) => {
                fixed.insert(p, v);
            }
            None => {
                return Err(CliError::config(format!(
                    "fit: `{p}` is neither fixed nor free and the scenario does not provide it"
                )))
            }
        }
    }
    let irf = if f.use_irf { Some(cfg.hbt_irf("fit")?) } else { None };
    let problem = FitProblem {
        model: f.model,
        grid,
        values,
        sigma,
        fixed,
        free,
        irf,
    };
    problem.validate().map_err(|e| CliError::config(format!("fit: {e}")))?;
    Ok(problem)
}

/// Fit report in scenario units.
#[derive(Debug, Clone, Serialize)]
pub struct CliFitReport {
    pub model: ModelKind,
    pub data: PathBuf,
    pub units: BTreeMap<Param, &'static str>,
    pub estimates: BTreeMap<Param, f64>,
    pub stderr: BTreeMap<Param, f64>,
    pub parameters: BTreeMap<Param, f64>,
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub input_digest: String,
}

pub fn fit_report(cfg: &ScenarioConfig) -> CliResult<CliFitReport> {
    let problem = fit_problem(cfg)?;
    let result = fit(&problem)?;
    let report = FitReport::new(&problem, &result);
    let t1 = cfg.emitter_params()?.t1;
    let convert = |m: &BTreeMap<Param, f64>| -> BTreeMap<Param, f64> {
        m.iter().map(|(p, v)| (*p, v / unit_factor(*p, t1))).collect()
    };
    Ok(CliFitReport {
        model: problem.model,
        data: cfg.fit.as_ref().expect("checked by fit_problem").data.clone(),
        units: report.parameters.keys().map(|p| (*p, unit_name(*p))).collect(),
        estimates: convert(&report.estimates),
        stderr: convert(&report.stderr),
        parameters: convert(&report.parameters),
        residual_norm: report.residual_norm,
        reduced_chi2: report.reduced_chi2,
        iterations: report.iterations,
        converged: report.converged,
        input_digest: input_digest(&problem),
    })
}

pub fn fit_command(cfg: &ScenarioConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let report = fit_report(cfg)?;
    let path = ctx.out.join("fit.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_atomic(&path, json.as_bytes())?;
    Ok(vec![path])
}
