//! Run configuration: a TOML file with flat sections, plus dotted-key
//! overrides (`scheme.t_end=2`). Validation reports every violation with its
//! key path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcm_core::diagnostics::MonitorConfig;
use tcm_core::initial::{InitialData, RandomSpectrum};
use tcm_core::{DissipationSpec, GFunction, Scheme, SchemeConfig};

/// One problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  {}: {}", x.key, x.message))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    /// `fractional`, `log-supercritical` or `none`.
    pub variant: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Named weight for the log variant.
    pub g: Option<String>,
    /// `(tau, g)` knots; overrides `g`.
    pub g_table: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// `taylor-green`, `random-smooth` or `from-file`.
    pub kind: String,
    pub seed: u64,
    pub spectrum_slope: f64,
    pub cutoff: f64,
    pub amplitude: f64,
    /// Taylor-Green only: RMS of the random `v` and `theta`; 0 leaves them zero.
    pub perturbation: f64,
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        let r = RandomSpectrum::default();
        InitialSection {
            kind: "taylor-green".into(),
            seed: r.seed,
            spectrum_slope: r.spectrum_slope,
            cutoff: r.cutoff,
            amplitude: r.amplitude,
            perturbation: 0.0,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub dt: f64,
    pub adaptive: bool,
    pub cfl: f64,
    /// `etdrk2` or `rk2`.
    pub method: String,
    pub t_end: f64,
    pub max_steps: u64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            dt: 1e-2,
            adaptive: true,
            cfl: 0.5,
            method: "etdrk2".into(),
            t_end: 5.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSection {
    pub sigma: f64,
    pub sobolev: Vec<f64>,
    pub sample_interval: usize,
}

impl Default for MonitorSection {
    fn default() -> Self {
        let m = MonitorConfig::default();
        MonitorSection {
            sigma: m.sigma,
            sobolev: m.sobolev,
            sample_interval: m.sample_interval,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Steps between snapshots; 0 keeps only the final one.
    pub snapshot_interval: u64,
    /// Put each run in a fresh `run-<timestamp>` directory under `dir`.
    pub timestamped: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs"),
            snapshot_interval: 0,
            timestamped: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Weights for extra log-variant cells at `alpha = 2`, `beta = 0`.
    pub g: Vec<String>,
    /// Concurrent cells; 0 means the `TCM_WORKERS` variable or all cores.
    pub workers: usize,
    /// `shared` (every cell uses `initial.seed`) or `per-cell` (seed + index).
    pub seed_mode: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub blowup_threshold: f64,
    /// Relative `||div u||` above which a warning is printed.
    pub divergence_warning: f64,
    pub phi_series_threshold: f64,
    pub cfl_epsilon: f64,
    pub g_check_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SchemeConfig::default();
        Tolerances {
            blowup_threshold: MonitorConfig::default().blowup_threshold,
            divergence_warning: 1e-10,
            phi_series_threshold: s.phi_series_threshold,
            cfl_epsilon: s.cfl_epsilon,
            g_check_points: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub dissipation: DissipationSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Where a configuration falls relative to the known well-posedness results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `alpha + beta >= 2` and `1 < alpha < 2`
    #[serde(rename = "Theorem-1.1")]
    Fractional,
    /// `alpha = 2`, `beta = 0`
    #[serde(rename = "borderline")]
    Borderline,
    /// log-supercritical dissipation on `u`, none on `v`
    #[serde(rename = "Theorem-1.2-log")]
    Log,
    #[serde(rename = "supercritical")]
    Supercritical,
}

impl Regime {
    pub fn of(spec: &DissipationSpec) -> Regime {
        match spec {
            DissipationSpec::LogSupercritical { .. } => Regime::Log,
            DissipationSpec::Fractional { alpha, beta } if *alpha == 2.0 && *beta == 0.0 => {
                Regime::Borderline
            }
            s if s.in_fractional_regime() => Regime::Fractional,
            _ => Regime::Supercritical,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Fractional => "Theorem-1.1",
            Regime::Borderline => "borderline",
            Regime::Log => "Theorem-1.2-log",
            Regime::Supercritical => "supercritical",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Reads and validates a config file, applying `overrides` (`key=value`
/// pairs with dotted keys) first.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut violations = Vec::new();
    for o in overrides {
        if let Err(v) = apply_override(&mut table, o) {
            violations.push(v);
        }
    }
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations));
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Invalid(vec![Violation {
            key: if key == "." { "<root>".into() } else { key },
            message: e.into_inner().to_string(),
        }])
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a
/// plain string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), Violation> {
    let Some((key, raw)) = item.split_once('=') else {
        return Err(Violation {
            key: item.into(),
            message: "override must look like key=value".into(),
        });
    };
    let key = key.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Violation {
        key: key.into(),
        message: "empty key".into(),
    })?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
        cur = entry.as_table_mut().ok_or_else(|| Violation {
            key: key.into(),
            message: format!("'{p}' is not a section"),
        })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Checks every invariant and returns all violations together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        let mut bad = |key: &str, message: String| {
            v.push(Violation {
                key: key.into(),
                message,
            })
        };
        let n = self.grid.n;
        if n < 4 || !n.is_power_of_two() {
            bad("grid.n", format!("must be a power of two >= 4, got {n}"));
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            bad("grid.length", format!("must be > 0, got {}", self.grid.length));
        }

        let d = &self.dissipation;
        match d.variant.as_str() {
            "fractional" => {
                for (key, x) in [("dissipation.alpha", d.alpha), ("dissipation.beta", d.beta)] {
                    match x {
                        None => bad(key, "required for the fractional variant".into()),
                        Some(x) if !(x >= 0.0 && x.is_finite()) => {
                            bad(key, format!("must be >= 0, got {x}"))
                        }
                        _ => {}
                    }
                }
            }
            "log-supercritical" => {
                if d.g.is_none() && d.g_table.is_none() {
                    bad("dissipation.g", "required for the log-supercritical variant".into());
                }
                match self.g_function() {
                    Ok(Some(g)) => {
                        if let Err(e) = g.validate(self.tolerances.g_check_points) {
                            bad("dissipation.g", e.to_string());
                        }
                    }
                    Ok(None) => {}
                    Err(e) => bad("dissipation.g", e),
                }
            }
            "none" => {}
            other => bad(
                "dissipation.variant",
                format!("unknown variant '{other}' (fractional, log-supercritical, none)"),
            ),
        }

        let i = &self.initial;
        match i.kind.as_str() {
            "taylor-green" | "random-smooth" => {}
            "from-file" => {
                if i.path.is_none() {
                    bad("initial.path", "required when kind = from-file".into());
                }
            }
            other => bad(
                "initial.kind",
                format!("unknown kind '{other}' (taylor-green, random-smooth, from-file)"),
            ),
        }
        if !(i.cutoff >= 1.0) {
            bad("initial.cutoff", format!("must be >= 1, got {}", i.cutoff));
        } else if n >= 4 && i.cutoff > std::f64::consts::SQRT_2 * (n / 2) as f64 * self.k_unit() {
            bad("initial.cutoff", format!("{} exceeds the largest grid wavenumber", i.cutoff));
        }
        if !(i.amplitude >= 0.0) {
            bad("initial.amplitude", format!("must be >= 0, got {}", i.amplitude));
        }
        if !(i.perturbation >= 0.0) {
            bad("initial.perturbation", format!("must be >= 0, got {}", i.perturbation));
        }
        if !i.spectrum_slope.is_finite() {
            bad("initial.spectrum_slope", "must be finite".into());
        }

        let s = &self.scheme;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            bad("scheme.dt", format!("must be > 0, got {}", s.dt));
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            bad("scheme.cfl", format!("must lie in (0, 1], got {}", s.cfl));
        }
        if !matches!(s.method.as_str(), "etdrk2" | "rk2") {
            bad("scheme.method", format!("unknown method '{}' (etdrk2, rk2)", s.method));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            bad("scheme.t_end", format!("must be >= 0, got {}", s.t_end));
        }

        let m = &self.monitor;
        if !(m.sigma > 0.0 && m.sigma < 1.0) {
            bad("monitor.sigma", format!("must lie in (0, 1), got {}", m.sigma));
        }
        if m.sample_interval == 0 {
            bad("monitor.sample_interval", "must be >= 1".into());
        }
        if m.sobolev.iter().any(|x| !x.is_finite()) {
            bad("monitor.sobolev", "indices must be finite".into());
        }

        let w = &self.sweep;
        for (key, list) in [("sweep.alphas", &w.alphas), ("sweep.betas", &w.betas)] {
            if let Some(x) = list.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                bad(key, format!("entries must be >= 0, got {x}"));
            }
        }
        for name in &w.g {
            if let Err(e) = GFunction::parse(name) {
                bad("sweep.g", e.to_string());
            }
        }
        if !matches!(w.seed_mode.as_str(), "" | "shared" | "per-cell") {
            bad("sweep.seed_mode", format!("unknown mode '{}' (shared, per-cell)", w.seed_mode));
        }

        let t = &self.tolerances;
        for (key, x) in [
            ("tolerances.blowup_threshold", t.blowup_threshold),
            ("tolerances.divergence_warning", t.divergence_warning),
            ("tolerances.phi_series_threshold", t.phi_series_threshold),
            ("tolerances.cfl_epsilon", t.cfl_epsilon),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                bad(key, format!("must be > 0, got {x}"));
            }
        }
        if t.g_check_points < 2 {
            bad("tolerances.g_check_points", "must be >= 2".into());
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    fn k_unit(&self) -> f64 {
        std::f64::consts::TAU / self.grid.length
    }

    fn g_function(&self) -> Result<Option<GFunction>, String> {
        let d = &self.dissipation;
        if let Some(t) = &d.g_table {
            return Ok(Some(GFunction::Table(t.clone())));
        }
        match &d.g {
            Some(name) => GFunction::parse(name).map(Some).map_err(|e| e.to_string()),
            None => Ok(None),
        }
    }

    /// The dissipation of a validated config.
    pub fn dissipation_spec(&self) -> DissipationSpec {
        let d = &self.dissipation;
        match d.variant.as_str() {
            "fractional" => DissipationSpec::Fractional {
                alpha: d.alpha.unwrap_or(0.0),
                beta: d.beta.unwrap_or(0.0),
            },
            "log-supercritical" => DissipationSpec::LogSupercritical {
                g: self.g_function().ok().flatten().unwrap_or(GFunction::One),
            },
            _ => DissipationSpec::None,
        }
    }

    pub fn set_dissipation(&mut self, spec: &DissipationSpec) {
        let d = &mut self.dissipation;
        *d = DissipationSection {
            variant: String::new(),
            alpha: None,
            beta: None,
            g: None,
            g_table: None,
        };
        match spec {
            DissipationSpec::Fractional { alpha, beta } => {
                d.variant = "fractional".into();
                d.alpha = Some(*alpha);
                d.beta = Some(*beta);
            }
            DissipationSpec::LogSupercritical { g } => {
                d.variant = "log-supercritical".into();
                match g {
                    GFunction::Table(t) => d.g_table = Some(t.clone()),
                    other => d.g = Some(other.to_string()),
                }
            }
            DissipationSpec::None => d.variant = "none".into(),
        }
    }

    pub fn regime(&self) -> Regime {
        Regime::of(&self.dissipation_spec())
    }

    pub fn initial_data(&self) -> InitialData {
        let i = &self.initial;
        let spectrum = |amplitude| RandomSpectrum {
            seed: i.seed,
            spectrum_slope: i.spectrum_slope,
            cutoff: i.cutoff,
            amplitude,
        };
        match i.kind.as_str() {
            "random-smooth" => InitialData::RandomSmooth(spectrum(i.amplitude)),
            "from-file" => InitialData::FromFile {
                path: i.path.clone().unwrap_or_default(),
            },
            _ => InitialData::TaylorGreen {
                perturbation: (i.perturbation > 0.0).then(|| spectrum(i.perturbation)),
            },
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        SchemeConfig {
            dt: s.dt,
            adaptive: s.adaptive,
            cfl: s.cfl,
            scheme: if s.method == "rk2" { Scheme::Rk2 } else { Scheme::Etdrk2 },
            t_end: s.t_end,
            max_steps: s.max_steps,
            phi_series_threshold: self.tolerances.phi_series_threshold,
            cfl_epsilon: self.tolerances.cfl_epsilon,
        }
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            sigma: self.monitor.sigma,
            sobolev: self.monitor.sobolev.clone(),
            blowup_threshold: self.tolerances.blowup_threshold,
            sample_interval: self.monitor.sample_interval,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n = 64

[dissipation]
variant = "fractional"
alpha = 1.5
beta = 0.5
"#;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.regime().label(), "Theorem-1.1");
        assert_eq!(cfg.initial.kind, "taylor-green");
        assert!((cfg.grid.length - std::f64::consts::TAU).abs() < 1e-15);
        // serialized form reloads to the same config
        assert_eq!(parse_config(&cfg.to_toml(), &[]).unwrap(), cfg);
    }

    #[test]
    fn every_violation_is_reported_with_its_key() {
        let err = parse_config(MINIMAL, &["dissipation.alpha=-1".into(), "grid.n=48".into(), "scheme.cfl=2".into()])
            .unwrap_err();
        let keys: Vec<&str> = err.violations().iter().map(|v| v.key.as_str()).collect();
        assert_eq!(keys, ["grid.n", "dissipation.alpha", "scheme.cfl"]);
    }

    #[test]
    fn type_and_key_errors_name_the_path() {
        let err = parse_config(MINIMAL, &["scheme.t_end=\"soon\"".into()]).unwrap_err();
        assert_eq!(err.violations()[0].key, "scheme.t_end");
        let err = parse_config(MINIMAL, &["scheme.tend=1".into()]).unwrap_err();
        assert!(err.violations()[0].message.contains("tend"));
        let err = parse_config("[grid]\nn = 8\n", &[]).unwrap_err();
        assert!(err.violations()[0].message.contains("dissipation"));
    }

    #[test]
    fn regime_labels() {
        let label = |o: &[&str]| {
            let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
            parse_config(MINIMAL, &o).unwrap().regime().label()
        };
        assert_eq!(label(&[]), "Theorem-1.1");
        assert_eq!(label(&["dissipation.alpha=2", "dissipation.beta=0"]), "borderline");
        assert_eq!(label(&["dissipation.alpha=1", "dissipation.beta=1"]), "supercritical");
        assert_eq!(label(&["dissipation.alpha=1.2", "dissipation.beta=0.5"]), "supercritical");
        assert_eq!(
            label(&["dissipation.variant=log-supercritical", "dissipation.g=sqrt-log"]),
            "Theorem-1.2-log"
        );
    }

    #[test]
    fn overrides_parse_literals_and_strings() {
        let cfg = parse_config(MINIMAL, &["monitor.sobolev=[0.5, 3]".into(), "initial.kind=random-smooth".into()])
            .unwrap();
        assert_eq!(cfg.monitor.sobolev, vec![0.5, 3.0]);
        assert!(matches!(cfg.initial_data(), InitialData::RandomSmooth(_)));
    }
}
