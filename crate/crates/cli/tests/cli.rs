//! End-to-end runs of the `resfluor` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resfluor_cli::Table;

const BIN: &str = env!("CARGO_BIN_EXE_resfluor");

const SCENARIO: &str = r#"
[emitter]
t1 = 0.76
t2 = 1.2
rabi = 0.6
detuning = 0.0

[instrument]
cavity_fwhm = 29.0
laser_linewidth = 3.0
setup_visibility = 0.9
coherent_tau = 22.0
hbt_irf = { kind = "gaussian", fwhm = 0.4 }

[background]
signal_at_saturation = 1.25e6
sbr_at_saturation = 1050.0
dark_rate = 150.0

[stochastic]
duration = 2.0e5
seed = 42
segments = 4
bin_width = 0.19
max_delay = 10.0
detector = { efficiency = 0.5, dark_rate = 1000.0, jitter_fwhm = 0.05, dead_time = 0.0 }

[grids]
g2_max_delay = 12.0
g2_points = 241
"#;

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn repro_without_config_uses_published_parameters() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["repro", "--out", s(dir.path())]);
    for f in [
        "fig1d_sbr.csv",
        "fig2a_spectrum.csv",
        "fig2c_spectrum.csv",
        "fig2f_g2.csv",
        "fig3a_visibility.csv",
    ] {
        let t = Table::load(&dir.path().join(f)).unwrap();
        assert!(t.rows() > 10, "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mu = summary["sidebands"]["eigenfrequency_mhz"].as_f64().unwrap();
    assert!((mu - 310.0).abs() < 15.0);
    let fwhm = summary["resolution_limited_peak"]["fitted_fwhm_mhz"].as_f64().unwrap();
    assert!((fwhm / 29.0 - 1.0).abs() < 0.25);
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    run_ok(&[
        "spectrum",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--format",
        "json",
    ]);
    let t = Table::load(&dir.path().join("spectrum.json")).unwrap();
    assert_eq!(t.columns[0].name, "detuning_mhz");
    assert_eq!(t.rows(), 2001);
}

#[test]
fn g2_without_drive_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &SCENARIO.replace("rabi = 0.6", "rabi = 0.0"));
    let out = run(&["g2", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no emission"));
    assert!(!dir.path().join("g2.csv").exists());
}

#[test]
fn misspelled_key_fails_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &SCENARIO.replace("cavity_fwhm", "cavity_fhwm"));
    let out = run(&["spectrum", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cavity_fhwm") && err.contains("line 9"), "{err}");
}

#[test]
fn missing_config_and_missing_block() {
    let out = run(&["g2"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let text = SCENARIO.split("[stochastic]").next().unwrap();
    let cfg = write_scenario(dir.path(), text);
    let out = run(&["stream", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[stochastic]"));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run(&["sbr", "--config", s(&cfg), "--out", s(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn stream_then_hist_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    let mut hists = Vec::new();
    for run_id in 0..2 {
        let out = dir.path().join(format!("run{run_id}"));
        run_ok(&["stream", "--config", s(&cfg), "--out", s(&out), "--seed", "42"]);
        run_ok(&["hist", "--config", s(&cfg), "--out", s(&out)]);
        hists.push(std::fs::read(out.join("hist.csv")).unwrap());
    }
    assert_eq!(hists[0], hists[1]);
    // another seed gives another realization
    let other = dir.path().join("other");
    run_ok(&["stream", "--config", s(&cfg), "--out", s(&other), "--seed", "43"]);
    run_ok(&["hist", "--config", s(&cfg), "--out", s(&other)]);
    assert_ne!(std::fs::read(other.join("hist.csv")).unwrap(), hists[0]);

    // explicit stream paths are accepted and give the same histogram
    let run0 = dir.path().join("run0");
    let explicit = dir.path().join("explicit");
    run_ok(&[
        "hist",
        "--config",
        s(&cfg),
        "--out",
        s(&explicit),
        s(&run0.join("stream_a.txt")),
        s(&run0.join("stream_b.txt")),
    ]);
    assert_eq!(std::fs::read(explicit.join("hist.csv")).unwrap(), hists[0]);

    let t = Table::load(&run0.join("hist.csv")).unwrap();
    let counts = t.column("counts").unwrap();
    assert!(counts.iter().sum::<f64>() > 100.0);
}

#[test]
fn g2_trace_feeds_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    run_ok(&["g2", "--config", s(&cfg), "--out", s(dir.path())]);
    // refit T2 from the convolved trace, starting elsewhere
    let fit_block = r#"
[fit]
model = "g2_curve"
data = "g2.csv"
column = "g2_irf"
use_irf = true
fixed = { scale = 1.0 }
free = [{ name = "t2", initial = 0.8, lower = 0.1, upper = 1.52 }]
"#;
    let cfg = write_scenario(dir.path(), &format!("{SCENARIO}{fit_block}"));
    run_ok(&["fit", "--config", s(&cfg), "--out", s(dir.path())]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert_eq!(report["units"]["t2"], "ns");
    let t2 = report["estimates"]["t2"].as_f64().unwrap();
    assert!((t2 / 1.2 - 1.0).abs() < 1e-4, "t2 = {t2}");
    assert_eq!(report["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn visibility_trace_feeds_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    run_ok(&["g1", "--config", s(&cfg), "--out", s(dir.path())]);
    let fit_block = r#"
[fit]
model = "visibility_curve"
data = "g1.csv"
free = [{ name = "coherent_tau", initial = 10.0, lower = 1.0, upper = 50.0 }, { name = "scale", initial = 0.5, lower = 0.0, upper = 1.0 }]
"#;
    let cfg = write_scenario(dir.path(), &format!("{SCENARIO}{fit_block}"));
    run_ok(&["fit", "--config", s(&cfg), "--out", s(dir.path())]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let tau = report["estimates"]["coherent_tau"].as_f64().unwrap();
    assert!((tau / 22.0 - 1.0).abs() < 1e-5, "tau = {tau}");
}

#[test]
fn fit_rejects_unassigned_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    run_ok(&["g2", "--config", s(&cfg), "--out", s(dir.path())]);
    // scale is neither fixed nor free and has no scenario value for g2
    let fit_block = r#"
[fit]
model = "g2_curve"
data = "g2.csv"
free = [{ name = "t2", initial = 0.8 }]
"#;
    let cfg = write_scenario(dir.path(), &format!("{SCENARIO}{fit_block}"));
    let out = run(&["fit", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scale"));
}

#[test]
fn sbr_table_is_plot_ready() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), SCENARIO);
    run_ok(&["sbr", "--config", s(&cfg), "--out", s(dir.path())]);
    let text = std::fs::read_to_string(dir.path().join("sbr.csv")).unwrap();
    assert!(text.starts_with("power_ratio,signal,background,sbr\n"));
    let first = text.lines().nth(1).unwrap();
    // nine significant digits
    assert!(first
        .split(',')
        .all(|f| f.split('e').next().unwrap().trim_start_matches('-').len() == 10));
}
