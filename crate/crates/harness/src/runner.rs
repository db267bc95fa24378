//! Single runs, resumes and sweeps, with their on-disk outputs.
//!
//! A run directory holds `config.toml` (the effective configuration),
//! `diagnostics.csv`, `snapshot_<step>.bin` files, `summary.json` and a
//! `manifest.json` listing every file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use tcm_core::diagnostics::{sobolev_norm, DiagnosticsRecord, HaltFlag, Monitor};
use tcm_core::sink::DirectorySink;
use tcm_core::snapshot::Snapshot;
use tcm_core::stepper::{run, OutputSchedule, RunSummary};
use tcm_core::{Checkpoint, DissipationSpec, GFunction, Grid, Model, RunSink, Stepper, TcmState};

use crate::config::{RunConfig, Tolerances};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    pub const COMPLETED: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const CONFIG: i32 = 2;
    /// Halted on a threshold crossing; expected in supercritical cells.
    pub const BLOW_UP: i32 = 3;
    pub const MAX_STEPS: i32 = 4;
}

pub fn exit_code(halt: HaltFlag) -> i32 {
    match halt {
        HaltFlag::BlowUp => exit::BLOW_UP,
        HaltFlag::MaxSteps => exit::MAX_STEPS,
        _ => exit::COMPLETED,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub run_dir: PathBuf,
    pub regime: String,
    pub dissipation: String,
    pub seed: u64,
    pub halt: HaltFlag,
    pub halt_reason: String,
    pub exit_code: i32,
    pub steps_taken: u64,
    pub final_step: u64,
    pub final_time: f64,
    pub records_written: usize,
    pub bkm_integral: f64,
    pub initial_hs: Vec<(f64, f64)>,
    /// Largest value of each recorded Sobolev norm over the run.
    pub max_hs: Vec<(f64, f64)>,
    pub max_grad_u_linf: f64,
    pub max_div_u: f64,
    pub snapshots: Vec<PathBuf>,
    pub resumed_from: Option<PathBuf>,
    pub wall_seconds: f64,
    pub tolerances: Tolerances,
    pub config: RunConfig,
}

/// Forwards to a [`DirectorySink`] and keeps running maxima.
struct TrackingSink {
    inner: DirectorySink,
    records: usize,
    max_hs: Vec<(f64, f64)>,
    max_grad: f64,
    max_div: f64,
}

impl TrackingSink {
    fn new(inner: DirectorySink, sobolev: &[f64]) -> Self {
        TrackingSink {
            inner,
            records: 0,
            max_hs: sobolev.iter().map(|&s| (s, 0.0)).collect(),
            max_grad: 0.0,
            max_div: 0.0,
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    // keep NaN visible in the maxima
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

impl RunSink for TrackingSink {
    fn record(&mut self, r: &DiagnosticsRecord) -> tcm_core::Result<()> {
        self.records += 1;
        for (m, (_, h)) in self.max_hs.iter_mut().zip(&r.hs_norms) {
            m.1 = nan_max(m.1, *h);
        }
        self.max_grad = nan_max(self.max_grad, r.grad_u_linf);
        self.max_div = nan_max(self.max_div, r.div_u_norm);
        self.inner.record(r)
    }

    fn snapshot(&mut self, state: &TcmState, checkpoint: &Checkpoint) -> tcm_core::Result<()> {
        self.inner.snapshot(state, checkpoint)
    }
}

fn timestamp() -> String {
    chrono::Local::now().format("%Y%m%dT%H%M%S%.3f").to_string()
}

/// `base/<prefix>-<timestamp>` (made unique), or `base` itself.
fn output_dir(base: &Path, prefix: &str, timestamped: bool) -> anyhow::Result<PathBuf> {
    let dir = if timestamped {
        let stem = base.join(format!("{prefix}-{}", timestamp()));
        let mut dir = stem.clone();
        let mut k = 1;
        while dir.exists() {
            dir = PathBuf::from(format!("{}-{k}", stem.display()));
            k += 1;
        }
        dir
    } else {
        base.to_path_buf()
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn build_model(cfg: &RunConfig) -> anyhow::Result<(std::sync::Arc<Grid>, Model)> {
    let grid = Grid::new(cfg.grid.n, cfg.grid.length)?;
    let spec = cfg.dissipation_spec();
    spec.validate(cfg.tolerances.g_check_points)?;
    let model = Model::new(&grid, spec)?;
    Ok((grid, model))
}

fn schedule(cfg: &RunConfig) -> OutputSchedule {
    OutputSchedule {
        snapshot_interval: (cfg.output.snapshot_interval > 0).then_some(cfg.output.snapshot_interval),
    }
}

struct Job<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    state: TcmState,
    start: Checkpoint,
    resumed_from: Option<PathBuf>,
}

fn execute(job: Job<'_>) -> anyhow::Result<RunReport> {
    let Job {
        cfg,
        dir,
        state,
        start,
        resumed_from,
    } = job;
    let clock = Instant::now();
    let (_, model) = build_model(cfg)?;
    let spec = model.spec().clone();
    fs::write(dir.join("config.toml"), cfg.to_toml())?;

    let initial_hs = cfg
        .monitor
        .sobolev
        .iter()
        .map(|&s| {
            let h = [&state.u, &state.v, &state.theta]
                .iter()
                .map(|f| sobolev_norm(f, s).powi(2))
                .sum::<f64>()
                .sqrt();
            (s, h)
        })
        .collect::<Vec<_>>();

    let config_json = serde_json::to_value(cfg)?;
    let inner = DirectorySink::create(&dir, &cfg.monitor.sobolev, spec.to_string(), config_json)?;
    let mut sink = TrackingSink::new(inner, &cfg.monitor.sobolev);
    let mut monitor = Monitor::new(&model, cfg.monitor_config())?;
    let mut stepper = Stepper::new(model, cfg.scheme_config())?;
    let summary: RunSummary = run(state, &mut stepper, &mut monitor, schedule(cfg), start, &mut sink)?;

    if sink.max_div > cfg.tolerances.divergence_warning {
        eprintln!(
            "warning: max ||div u|| = {:e} exceeds {:e}",
            sink.max_div, cfg.tolerances.divergence_warning
        );
    }

    let report = RunReport {
        version: VERSION.into(),
        run_dir: dir.clone(),
        regime: cfg.regime().label().into(),
        dissipation: spec.to_string(),
        seed: cfg.initial.seed,
        halt: summary.halt,
        halt_reason: summary.halt_reason.clone(),
        exit_code: exit_code(summary.halt),
        steps_taken: summary.steps_taken,
        final_step: summary.final_step,
        final_time: summary.final_state.time,
        records_written: sink.records,
        bkm_integral: summary.checkpoint.integrals.bkm_integral,
        initial_hs,
        max_hs: sink.max_hs.clone(),
        max_grad_u_linf: sink.max_grad,
        max_div_u: sink.max_div,
        snapshots: sink.inner.written.clone(),
        resumed_from,
        wall_seconds: clock.elapsed().as_secs_f64(),
        tolerances: cfg.tolerances.clone(),
        config: cfg.clone(),
    };
    drop(sink);
    write_json(&dir.join("summary.json"), &report)?;
    write_manifest(&dir)?;
    Ok(report)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest {
    version: String,
    created: String,
    files: Vec<ManifestEntry>,
}

fn write_manifest(dir: &Path) -> anyhow::Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        version: VERSION.into(),
        created: chrono::Local::now().to_rfc3339(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> anyhow::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.file_name() != Some("manifest.json".as_ref()) || dir != root {
            out.push(ManifestEntry {
                path: path.strip_prefix(root)?.display().to_string(),
                bytes: entry.metadata()?.len(),
            });
        }
    }
    Ok(())
}

/// Runs one configuration from its initial data.
pub fn run_single(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let (grid, _) = build_model(cfg)?;
    let state = cfg.initial_data().build(&grid).context("building initial data")?;
    let dir = output_dir(&cfg.output.dir, "run", cfg.output.timestamped)?;
    execute(Job {
        cfg,
        dir,
        state,
        start: Checkpoint::default(),
        resumed_from: None,
    })
}

/// A snapshot header value that disagrees with the configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub key: String,
    pub snapshot: String,
    pub config: String,
}

#[derive(Debug, thiserror::Error)]
#[error("snapshot does not match the configuration:\n{}", .0.iter().map(|m| format!("  {}: snapshot {} vs config {}", m.key, m.snapshot, m.config)).collect::<Vec<_>>().join("\n"))]
pub struct ResumeRefused(pub Vec<Mismatch>);

pub fn resume_mismatches(snap: &Snapshot, cfg: &RunConfig) -> Vec<Mismatch> {
    let h = &snap.header;
    let mut out = Vec::new();
    let mut cmp = |key: &str, a: String, b: String| {
        if a != b {
            out.push(Mismatch {
                key: key.into(),
                snapshot: a,
                config: b,
            });
        }
    };
    cmp("grid.n", h.n.to_string(), cfg.grid.n.to_string());
    cmp("grid.length", h.domain_length.to_string(), cfg.grid.length.to_string());
    cmp("dissipation", h.dissipation.clone(), cfg.dissipation_spec().to_string());
    out
}

/// Continues the run that wrote `snapshot` up to `cfg.scheme.t_end`, in a
/// new run directory. Step numbers and running integrals carry on from the
/// snapshot.
pub fn resume(snapshot: &Path, cfg: &RunConfig) -> anyhow::Result<RunReport> {
    let snap = Snapshot::load(snapshot).with_context(|| format!("loading {}", snapshot.display()))?;
    let mismatches = resume_mismatches(&snap, cfg);
    if !mismatches.is_empty() {
        return Err(ResumeRefused(mismatches).into());
    }
    let (grid, _) = build_model(cfg)?;
    let state = snap.state_on(&grid)?;
    let dir = output_dir(&cfg.output.dir, "resume", cfg.output.timestamped)?;
    execute(Job {
        cfg,
        dir,
        state,
        start: snap.header.checkpoint.clone(),
        resumed_from: Some(snapshot.to_path_buf()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepCell {
    pub index: usize,
    pub spec: DissipationSpec,
    pub seed: u64,
}

/// The `alphas x betas` fractional cells followed by one log-variant cell per
/// entry of `sweep.g`. Empty `alphas` or `betas` fall back to the configured
/// value; a config with neither a fractional grid nor `g` entries sweeps
/// only its own dissipation.
pub fn sweep_cells(cfg: &RunConfig) -> Vec<SweepCell> {
    let w = &cfg.sweep;
    let base = cfg.dissipation_spec();
    let mut specs = Vec::new();
    if !w.alphas.is_empty() || !w.betas.is_empty() {
        let (a0, b0) = match base {
            DissipationSpec::Fractional { alpha, beta } => (alpha, beta),
            _ => (2.0, 0.0),
        };
        let alphas = if w.alphas.is_empty() { vec![a0] } else { w.alphas.clone() };
        let betas = if w.betas.is_empty() { vec![b0] } else { w.betas.clone() };
        for &alpha in &alphas {
            for &beta in &betas {
                specs.push(DissipationSpec::Fractional { alpha, beta });
            }
        }
    }
    for name in &w.g {
        let g = GFunction::parse(name).expect("validated");
        specs.push(DissipationSpec::LogSupercritical { g });
    }
    if specs.is_empty() {
        specs.push(base);
    }
    specs
        .into_iter()
        .enumerate()
        .map(|(index, spec)| SweepCell {
            index,
            spec,
            seed: if w.seed_mode == "per-cell" {
                cfg.initial.seed.wrapping_add(index as u64)
            } else {
                cfg.initial.seed
            },
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub cell: usize,
    pub variant: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub g: Option<String>,
    pub regime: String,
    pub seed: u64,
    /// `bounded`, `halted`, `max-steps` or `failed`.
    pub classification: String,
    pub halt: Option<HaltFlag>,
    pub exit_code: i32,
    pub final_time: Option<f64>,
    pub steps: Option<u64>,
    pub bkm_integral: Option<f64>,
    pub max_hs: Vec<(f64, f64)>,
    pub run_dir: PathBuf,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub version: String,
    pub note: String,
    pub sweep_dir: PathBuf,
    pub workers: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn cell_config(cfg: &RunConfig, cell: &SweepCell, dir: &Path) -> RunConfig {
    let mut c = cfg.clone();
    c.set_dissipation(&cell.spec);
    c.initial.seed = cell.seed;
    c.output.dir = dir.to_path_buf();
    c.output.timestamped = false;
    c.sweep = Default::default();
    c
}

fn row(cell: &SweepCell, cfg: &RunConfig, dir: PathBuf, result: anyhow::Result<RunReport>) -> SweepRow {
    let (variant, alpha, beta, g) = match &cell.spec {
        DissipationSpec::Fractional { alpha, beta } => ("fractional", Some(*alpha), Some(*beta), None),
        DissipationSpec::LogSupercritical { g } => ("log-supercritical", None, None, Some(g.to_string())),
        DissipationSpec::None => ("none", None, None, None),
    };
    let mut r = SweepRow {
        cell: cell.index,
        variant: variant.into(),
        alpha,
        beta,
        g,
        regime: crate::config::Regime::of(&cell.spec).label().into(),
        seed: cell.seed,
        classification: "failed".into(),
        halt: None,
        exit_code: exit::ERROR,
        final_time: None,
        steps: None,
        bkm_integral: None,
        max_hs: cfg.monitor.sobolev.iter().map(|&s| (s, f64::NAN)).collect(),
        run_dir: dir,
        error: None,
    };
    match result {
        Ok(rep) => {
            r.classification = match rep.halt {
                HaltFlag::BlowUp => "halted",
                HaltFlag::MaxSteps => "max-steps",
                _ => "bounded",
            }
            .into();
            r.halt = Some(rep.halt);
            r.exit_code = rep.exit_code;
            r.final_time = Some(rep.final_time);
            r.steps = Some(rep.final_step);
            r.bkm_integral = Some(rep.bkm_integral);
            r.max_hs = rep.max_hs;
        }
        Err(e) => r.error = Some(format!("{e:#}")),
    }
    r
}

/// Resolves the worker budget: explicit value, else `sweep.workers`, else
/// all cores.
pub fn worker_budget(explicit: Option<usize>, cfg: &RunConfig) -> usize {
    explicit
        .filter(|&w| w > 0)
        .or((cfg.sweep.workers > 0).then_some(cfg.sweep.workers))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell (concurrently, up to `workers`) and writes `sweep.csv`
/// and `sweep.json` in cell order.
pub fn run_sweep(cfg: &RunConfig, workers: usize) -> anyhow::Result<SweepReport> {
    let cells = sweep_cells(cfg);
    let dir = output_dir(&cfg.output.dir, "sweep", cfg.output.timestamped)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cell_dir = dir.join(format!("cell-{:03}", cell.index));
                let c = cell_config(cfg, cell, &cell_dir);
                let result = c
                    .validate()
                    .map_err(anyhow::Error::from)
                    .and_then(|_| run_single(&c));
                row(cell, cfg, cell_dir, result)
            })
            .collect()
    });
    let report = SweepReport {
        version: VERSION.into(),
        note: "bounded/halted is a qualitative probe of the dissipation regimes, not a proof of regularity or blow-up".into(),
        sweep_dir: dir.clone(),
        workers,
        rows,
    };
    write_sweep_csv(&dir.join("sweep.csv"), &report, &cfg.monitor.sobolev)?;
    write_json(&dir.join("sweep.json"), &report)?;
    write_manifest(&dir)?;
    Ok(report)
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn write_sweep_csv(path: &Path, report: &SweepReport, sobolev: &[f64]) -> anyhow::Result<()> {
    let mut cols: Vec<String> = [
        "cell",
        "variant",
        "alpha",
        "beta",
        "g",
        "regime",
        "seed",
        "classification",
        "halt",
        "exit_code",
        "final_time",
        "steps",
        "bkm_integral",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(sobolev.iter().map(|s| format!("max_hs_{s}")));
    cols.push("error".into());
    let mut out = cols.join(",");
    out.push('\n');
    for r in &report.rows {
        let mut v = vec![
            r.cell.to_string(),
            r.variant.clone(),
            opt(&r.alpha),
            opt(&r.beta),
            opt(&r.g),
            r.regime.clone(),
            r.seed.to_string(),
            r.classification.clone(),
            opt(&r.halt),
            r.exit_code.to_string(),
            r.final_time.map(|t| format!("{t:e}")).unwrap_or_default(),
            opt(&r.steps),
            r.bkm_integral.map(|t| format!("{t:e}")).unwrap_or_default(),
        ];
        v.extend(r.max_hs.iter().map(|(_, h)| format!("{h:e}")));
        // errors may contain commas and newlines
        v.push(r.error.as_deref().map(|e| format!("\"{}\"", e.replace('"', "'").replace('\n', " "))).unwrap_or_default());
        out.push_str(&v.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
