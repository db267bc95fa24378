use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tcm_core::diagnostics::sobolev_norm;
use tcm_core::lp::{BesovNormRequest, DyadicFilterBank};
use tcm_core::snapshot::Snapshot;
use tcm_core::Grid;
use tcm_harness::checks::{self, filter_audit};
use tcm_harness::config::load_config;
use tcm_harness::runner::{self, exit, worker_budget};
use tcm_harness::ConfigError;

/// Pseudo-spectral solver and diagnostics for the 2D tropical climate model.
///
/// Any `--section.key=value` flag is shorthand for `--set section.key=value`.
#[derive(Parser)]
#[command(name = "tcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Override a config key, e.g. `--set scheme.t_end=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every cell of the configured alpha x beta (and g) sweep.
    Sweep {
        config: PathBuf,
        /// Concurrent cells.
        #[arg(long, env = "TCM_WORKERS")]
        workers: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Continue a run from one of its snapshots.
    Resume {
        snapshot: PathBuf,
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Audit the dyadic filter bank on a grid.
    CheckFilters {
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        length: f64,
        /// Random shell fields for the Bernstein check.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the invariant suite.
    CheckProperties {
        /// Include the slow run-based checks.
        #[arg(long)]
        all: bool,
        /// Only these check numbers (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Directory for run outputs; a temporary one by default.
        #[arg(long)]
        scratch: Option<PathBuf>,
    },
    /// Sobolev and Besov norms of the fields in a snapshot.
    Norms {
        snapshot: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        sobolev: Vec<f64>,
        /// `s,p,r` triples; p and r accept `inf`. Repeatable.
        #[arg(long, value_name = "S,P,R")]
        besov: Vec<String>,
    },
}

/// Rewrites `--a.b=v` and `--a.b v` into `--set a.b=v`.
fn expand_dotted(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.peekable();
    while let Some(a) = it.next() {
        match a.strip_prefix("--") {
            Some(rest) if rest.contains('.') && !rest.starts_with('-') => {
                out.push("--set".into());
                if rest.contains('=') {
                    out.push(rest.to_string());
                } else {
                    let v = it.next().unwrap_or_default();
                    out.push(format!("{rest}={v}"));
                }
            }
            _ => out.push(a),
        }
    }
    out
}

fn print_json(v: &impl Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct FieldNorms {
    field: &'static str,
    sobolev: Vec<(f64, f64)>,
    besov: Vec<(String, f64)>,
}

fn parse_besov(s: &str) -> anyhow::Result<BesovNormRequest> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    anyhow::ensure!(parts.len() == 3, "besov request must be s,p,r, got '{s}'");
    let num = |x: &str| -> anyhow::Result<f64> {
        if x == "inf" {
            Ok(f64::INFINITY)
        } else {
            x.parse().with_context(|| format!("bad number '{x}'"))
        }
    };
    Ok(BesovNormRequest::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)?)
}

fn norms(path: &PathBuf, sobolev: &[f64], besov: &[String]) -> anyhow::Result<()> {
    let snap = Snapshot::load(path)?;
    let grid = Grid::new(snap.header.n, snap.header.domain_length)?;
    let state = snap.state_on(&grid)?;
    let bank = DyadicFilterBank::new(&grid)?;
    let requests = besov
        .iter()
        .map(|s| parse_besov(s).map(|r| (s.clone(), r)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (name, f) in [("u", &state.u), ("v", &state.v), ("theta", &state.theta)] {
        let mut b = Vec::new();
        for (label, req) in &requests {
            b.push((label.clone(), bank.besov_norm(f, req)?));
        }
        out.push(FieldNorms {
            field: name,
            sobolev: sobolev.iter().map(|&s| (s, sobolev_norm(f, s))).collect(),
            besov: b,
        });
    }
    print_json(&serde_json::json!({
        "snapshot": path,
        "time": snap.header.time,
        "step": snap.header.step,
        "n": snap.header.n,
        "fields": out,
    }))
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load_config(&config, &overrides.set)?;
            let rep = runner::run_single(&cfg)?;
            print_json(&rep)?;
            Ok(rep.exit_code)
        }
        Command::Sweep {
            config,
            workers,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides.set)?;
            let rep = runner::run_sweep(&cfg, worker_budget(workers, &cfg))?;
            print_json(&rep)?;
            Ok(if rep.failures() > 0 { exit::ERROR } else { exit::COMPLETED })
        }
        Command::Resume {
            snapshot,
            config,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides.set)?;
            let rep = runner::resume(&snapshot, &cfg)?;
            print_json(&rep)?;
            Ok(rep.exit_code)
        }
        Command::CheckFilters {
            n,
            length,
            trials,
            seed,
        } => {
            let grid = Grid::new(n, length)?;
            let audit = filter_audit(&grid, trials, seed)?;
            let ok = audit.partition_defect <= 1e-13
                && audit.reconstruction_error <= 1e-12
                && audit.bernstein_violations == 0;
            print_json(&audit)?;
            Ok(if ok { exit::COMPLETED } else { exit::ERROR })
        }
        Command::CheckProperties { all, only, scratch } => {
            let tmp;
            let scratch = match scratch {
                Some(p) => p,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().to_path_buf()
                }
            };
            let ids: Vec<u8> = if !only.is_empty() {
                only
            } else if all {
                (1..=11).collect()
            } else {
                checks::QUICK.to_vec()
            };
            let mut failed = 0;
            for id in ids {
                let o = checks::criterion(id, &scratch);
                println!("{}", o.line());
                failed += usize::from(!o.passed);
            }
            Ok(if failed == 0 { exit::COMPLETED } else { exit::ERROR })
        }
        Command::Norms {
            snapshot,
            sobolev,
            besov,
        } => {
            norms(&snapshot, &sobolev, &besov)?;
            Ok(exit::COMPLETED)
        }
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<ConfigError>().is_some()
            || c.downcast_ref::<runner::ResumeRefused>().is_some()
            || matches!(c.downcast_ref::<tcm_core::Error>(), Some(tcm_core::Error::Config(_)))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(expand_dotted(std::env::args()));
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                exit::CONFIG
            } else {
                exit::ERROR
            }
        }
    };
    ExitCode::from(code as u8)
}
