use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BASE: &str = r#"
[grid]
n = 16

[dissipation]
variant = "fractional"
alpha = 1.5
beta = 0.5

[initial]
kind = "random-smooth"
seed = 3
cutoff = 4
amplitude = 0.5

[scheme]
dt = 0.01
t_end = 0.2

[monitor]
sample_interval = 5
"#;

fn tcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcm")).args(args).output().unwrap()
}

fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = format!(
        "{BASE}{extra}\n[output]\ndir = {:?}\n",
        out.to_str().unwrap()
    );
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    (dir, cfg)
}

fn json(o: &Output) -> Value {
    assert!(
        o.status.code().is_some(),
        "killed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not json ({e}); stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn csv_rows(run_dir: &Path) -> usize {
    let text = std::fs::read_to_string(run_dir.join("diagnostics.csv")).unwrap();
    text.lines().count() - 1
}

#[test]
fn run_reports_regime_and_writes_outputs() {
    let (_d, cfg) = setup("");
    let o = tcm(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    assert_eq!(rep["regime"], "Theorem-1.1");
    assert_eq!(rep["halt"], "completed");
    assert!((rep["final_time"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let run_dir = PathBuf::from(rep["run_dir"].as_str().unwrap());
    for f in ["config.toml", "diagnostics.csv", "summary.json", "manifest.json"] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }
    assert!(!rep["snapshots"].as_array().unwrap().is_empty());
}

#[test]
fn negative_alpha_is_a_config_error_naming_the_key() {
    let (_d, cfg) = setup("");
    let o = tcm(&["run", cfg.to_str().unwrap(), "--dissipation.alpha=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dissipation.alpha"), "{err}");
}

#[test]
fn dotted_flags_override_the_file() {
    let (_d, cfg) = setup("");
    let o = tcm(&[
        "run",
        cfg.to_str().unwrap(),
        "--dissipation.alpha",
        "2",
        "--dissipation.beta=0",
        "--set",
        "scheme.t_end=0.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    assert_eq!(rep["regime"], "borderline");
    assert!((rep["final_time"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn zero_horizon_writes_only_the_initial_record() {
    let (_d, cfg) = setup("");
    let o = tcm(&["run", cfg.to_str().unwrap(), "--scheme.t_end=0"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    assert_eq!(rep["steps_taken"], 0);
    assert_eq!(csv_rows(Path::new(rep["run_dir"].as_str().unwrap())), 1);
}

#[test]
fn sweep_runs_every_cell() {
    let (_d, cfg) = setup("[sweep]\nalphas = [1.0, 1.5, 2.0]\nbetas = [0.0, 0.25, 0.5]\n");
    let o = tcm(&["sweep", cfg.to_str().unwrap(), "--workers", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    let cells: Vec<u64> = rows.iter().map(|r| r["cell"].as_u64().unwrap()).collect();
    assert_eq!(cells, (0..9).collect::<Vec<_>>());
    let sweep_dir = PathBuf::from(rep["sweep_dir"].as_str().unwrap());
    let csv = std::fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn log_weight_sweep_labels_every_cell() {
    let (_d, cfg) = setup("[sweep]\ng = [\"one\", \"sqrt-log\", \"sqrt-log-loglog\"]\n");
    let o = tcm(&["sweep", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["regime"] == "Theorem-1.2-log"));
}

#[test]
fn resume_refuses_a_different_grid_and_is_a_noop_past_the_horizon() {
    let (_d, cfg) = setup("");
    let rep = json(&tcm(&["run", cfg.to_str().unwrap()]));
    let snaps = rep["snapshots"].as_array().unwrap();
    let last = snaps.last().unwrap().as_str().unwrap().to_string();

    let o = tcm(&["resume", &last, cfg.to_str().unwrap(), "--grid.n=32"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.n"));

    let o = tcm(&["resume", &last, cfg.to_str().unwrap(), "--scheme.t_end=0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let again = json(&o);
    assert_eq!(again["steps_taken"], 0);
    assert_eq!(again["final_step"], rep["final_step"]);
}

#[test]
fn resume_continues_to_a_later_horizon() {
    let (_d, cfg) = setup("");
    let rep = json(&tcm(&["run", cfg.to_str().unwrap()]));
    let last = rep["snapshots"].as_array().unwrap().last().unwrap().as_str().unwrap().to_string();
    let o = tcm(&["resume", &last, cfg.to_str().unwrap(), "--scheme.t_end=0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let more = json(&o);
    assert!((more["final_time"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert_ne!(more["run_dir"], rep["run_dir"]);
    assert!(more["bkm_integral"].as_f64().unwrap() > rep["bkm_integral"].as_f64().unwrap());
}

#[test]
fn norms_reads_a_snapshot() {
    let (_d, cfg) = setup("");
    let rep = json(&tcm(&["run", cfg.to_str().unwrap()]));
    let snap = rep["snapshots"][0].as_str().unwrap().to_string();
    let o = tcm(&["norms", &snap, "--besov", "1,2,2", "--besov", "0,inf,inf"]);
    assert_eq!(o.status.code(), Some(0));
    let out = json(&o);
    let fields = out["fields"].as_array().unwrap();
    assert_eq!(fields.len(), 3);
    assert_eq!(fields[0]["besov"].as_array().unwrap().len(), 2);
}

#[test]
fn filter_check_passes_on_a_small_grid() {
    let o = tcm(&["check-filters", "--n", "32", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let audit = json(&o);
    assert_eq!(audit["bernstein_violations"], 0);
}
