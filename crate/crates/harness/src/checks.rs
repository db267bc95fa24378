//! Invariant and acceptance checks, shared by `tcm check-properties`,
//! `tcm check-filters` and the acceptance test target.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tcm_core::diagnostics::{cancellation_residual, growth_condition_partial, HaltFlag};
use tcm_core::initial::RandomSpectrum;
use tcm_core::lp::{
    bernstein_ratio, least_squares, random_shell_field, semigroup_block_decay, DyadicFilterBank,
    FilterBankReport,
};
use tcm_core::model::{advect, stretch, tensor_divergence};
use tcm_core::snapshot::Snapshot;
use tcm_core::testing::{convolve, derivative, max_abs_diff, random_field, random_state};
use tcm_core::{
    DissipationSpec, GFunction, Grid, InitialData, Model, SchemeConfig, SpectralField, Stepper, TcmState,
};

use crate::config::{parse_config, RunConfig};
use crate::runner::{resume, run_single};

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 11] = [
    "cancellation identities",
    "instantaneous energy law",
    "nonlinear-term oracle",
    "scheme order",
    "linear exactness",
    "littlewood-paley suite",
    "semigroup block decay",
    "operator reduction g=1",
    "regime probe",
    "growth-condition closed form",
    "determinism and resume",
];

/// Checks cheap enough for `check-properties` by default.
pub const QUICK: [u8; 8] = [1, 2, 3, 5, 6, 7, 8, 10];

/// Runs criterion `id` (1-based). `scratch` receives output of the run-based
/// checks.
pub fn criterion(id: u8, scratch: &Path) -> Outcome {
    let clock = Instant::now();
    let result = match id {
        1 => cancellation(),
        2 => energy_law(),
        3 => nonlinear_oracle(),
        4 => scheme_order(),
        5 => linear_exactness(),
        6 => lp_suite(),
        7 => semigroup_decay(),
        8 => operator_reduction(),
        9 => regime_probe(scratch),
        10 => growth_closed_form(),
        11 => determinism_and_resume(scratch),
        _ => Err(format!("no criterion {id}")),
    };
    let seconds = clock.elapsed().as_secs_f64();
    let (passed, detail) = match result {
        Ok((ok, d)) => (ok, d),
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds,
    }
}

type Check = Result<(bool, String), String>;

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn cancellation() -> Check {
    let clock = Instant::now();
    let g = Grid::with_size(64).map_err(e)?;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (r1, r2) = cancellation_residual(&random_state(&g, seed)).map_err(e)?;
        worst = worst.max(r1).max(r2);
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok((
        worst < 1e-10 && secs < 10.0,
        format!("max residual {worst:.2e} < 1e-10 over 100 states, n=64, {secs:.1} s < 10 s"),
    ))
}

fn energy_law() -> Check {
    let clock = Instant::now();
    let g = Grid::with_size(64).map_err(e)?;
    let mut worst: f64 = 0.0;
    for spec in [
        DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 },
        DissipationSpec::LogSupercritical { g: GFunction::SqrtLog },
    ] {
        let model = Model::new(&g, spec).map_err(e)?;
        for seed in 0..100 {
            let s = random_state(&g, 1000 + seed);
            let rhs = model.rhs(&s).map_err(e)?;
            let d = model.dissipation_rate(&s);
            worst = worst.max((s.pair(&rhs) + d).abs() / d);
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-10 && secs < 10.0,
        format!("max |<rhs,w> + D| / D = {worst:.2e} <= 1e-10, both variants, {secs:.1} s < 10 s"),
    ))
}

/// `sum_i conv(a_i, d_i f_c)` for every component `c` of `f`.
fn oracle_advect(g: &Grid, a: &SpectralField, f: &SpectralField) -> Vec<Vec<Complex64>> {
    (0..f.components())
        .map(|c| {
            let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
            for i in 0..2 {
                let term = convolve(g, a.coeffs(i), &derivative(g, f.coeffs(c), i));
                acc.iter_mut().zip(term).for_each(|(x, y)| *x += y);
            }
            acc
        })
        .collect()
}

fn oracle_tensor_div(g: &Grid, v: &SpectralField) -> Vec<Vec<Complex64>> {
    (0..2)
        .map(|j| {
            let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
            for i in 0..2 {
                let prod = convolve(g, v.coeffs(i), v.coeffs(j));
                acc.iter_mut()
                    .zip(derivative(g, &prod, i))
                    .for_each(|(x, y)| *x += y);
            }
            acc
        })
        .collect()
}

fn nonlinear_oracle() -> Check {
    let clock = Instant::now();
    let g = Grid::with_size(8).map_err(e)?;
    let mut worst: f64 = 0.0;
    let diff = |got: &SpectralField, want: &[Vec<Complex64>]| {
        want.iter()
            .enumerate()
            .map(|(c, w)| max_abs_diff(got.coeffs(c), w))
            .fold(0.0, f64::max)
    };
    for trial in 0..20 {
        let s = random_state(&g, 500 + trial);
        let terms = [
            (advect(&s.u, &s.u), oracle_advect(&g, &s.u, &s.u)),
            (tensor_divergence(&s.v), oracle_tensor_div(&g, &s.v)),
            (advect(&s.u, &s.v), oracle_advect(&g, &s.u, &s.v)),
            (stretch(&s.v, &s.u), oracle_advect(&g, &s.v, &s.u)),
            (advect(&s.u, &s.theta), oracle_advect(&g, &s.u, &s.theta)),
        ];
        for (got, want) in terms {
            worst = worst.max(diff(&got.map_err(e)?, &want));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-12 && secs < 5.0,
        format!("max |spectral - convolution| = {worst:.2e} <= 1e-12, 20 trials n=8, {secs:.1} s < 5 s"),
    ))
}

fn fixed(dt: f64, t_end: f64) -> SchemeConfig {
    SchemeConfig {
        dt,
        adaptive: false,
        t_end,
        ..SchemeConfig::default()
    }
}

fn integrate(model: &Model, s0: &TcmState, steps: usize, t_end: f64) -> Result<TcmState, String> {
    let dt = t_end / steps as f64;
    let mut st = Stepper::new(model.clone(), fixed(dt, t_end)).map_err(e)?;
    let mut s = s0.clone();
    for _ in 0..steps {
        s = st.step(&s, dt).map_err(e)?;
    }
    Ok(s)
}

fn scheme_order() -> Check {
    let clock = Instant::now();
    let g = Grid::with_size(64).map_err(e)?;
    let s0 = InitialData::TaylorGreen {
        perturbation: Some(RandomSpectrum {
            seed: 4,
            spectrum_slope: -2.0,
            cutoff: 8.0,
            amplitude: 0.1,
        }),
    }
    .build(&g)
    .map_err(e)?;
    let model = Model::new(&g, DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 }).map_err(e)?;
    let t = 0.5;
    let reference = integrate(&model, &s0, 3200, t)?;
    let (mut x, mut y) = (vec![], vec![]);
    let mut errs = vec![];
    for steps in [50, 100, 200, 400] {
        let err = integrate(&model, &s0, steps, t)?.max_abs_diff(&reference);
        errs.push(format!("{err:.2e}"));
        x.push((t / steps as f64).ln());
        y.push(err.ln());
    }
    let (slope, _) = least_squares(&x, &y).map_err(e)?;
    let secs = clock.elapsed().as_secs_f64();
    Ok((
        (slope - 2.0).abs() <= 0.2 && secs < 60.0,
        format!("order {slope:.3} in 2.0 +- 0.2 (errors {}), {secs:.1} s < 60 s", errs.join(" ")),
    ))
}

fn linear_exactness() -> Check {
    let g = Grid::with_size(32).map_err(e)?;
    let sqrt_log = GFunction::SqrtLog;
    // symbols written out independently of the operator code
    let cases: [(DissipationSpec, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>); 2] = [
        (
            DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 },
            Box::new(|k2: f64| k2.powf(1.5)),
            Box::new(|k2: f64| k2.powf(0.5)),
        ),
        (
            DissipationSpec::LogSupercritical { g: sqrt_log.clone() },
            Box::new(move |k2: f64| {
                let gk = sqrt_log.eval(k2.sqrt());
                k2 * k2 / (gk * gk)
            }),
            Box::new(|_| 0.0),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (spec, mu, mv) in &cases {
        let model = Model::new(&g, spec.clone()).map_err(e)?.with_nonlinear(false);
        for dt in [1e-3, 1e-2, 0.1] {
            let mut st = Stepper::new(model.clone(), fixed(dt, 1.0)).map_err(e)?;
            let mut s = random_state(&g, 77);
            for _ in 0..3 {
                let next = st.step(&s, dt).map_err(e)?;
                for (a, b, m) in [(&s.u, &next.u, mu), (&s.v, &next.v, mv)] {
                    for c in 0..a.components() {
                        for (idx, (x, y)) in a.coeffs(c).iter().zip(b.coeffs(c)).enumerate() {
                            let want = x * (-dt * m(g.k_squared(idx))).exp();
                            worst = worst.max((y - want).norm());
                        }
                    }
                }
                worst = worst.max(next.theta.max_abs_diff(&s.theta));
                s = next;
            }
        }
    }
    Ok((
        worst <= 1e-14,
        format!("max |w_next - e^(-dt m) w| = {worst:.2e} <= 1e-14, both variants, dt in 1e-3..0.1"),
    ))
}

/// Audit of a filter bank: partition of unity, reconstruction and
/// Bernstein ratios on random shell fields.
#[derive(Clone, Debug, Serialize)]
pub struct FilterAudit {
    pub partition_defect: f64,
    pub reconstruction_error: f64,
    pub bernstein_trials: usize,
    /// `(kappa, min ratio, max ratio, bracket low, bracket high)`
    pub bernstein: Vec<(f64, f64, f64, f64, f64)>,
    pub bernstein_violations: usize,
    pub bank: FilterBankReport,
}

pub fn filter_audit(grid: &Arc<Grid>, trials: usize, seed: u64) -> tcm_core::Result<FilterAudit> {
    let bank = DyadicFilterBank::new(grid)?;
    let f = random_field(grid, seed);
    let mut sum = SpectralField::zeros(grid, 1);
    for j in bank.indices() {
        sum.axpy(1.0, &bank.dyadic_block(&f, j)?);
    }
    let reconstruction_error = sum.max_abs_diff(&f) / f.max_abs_coeff();

    // shells that fit inside the resolved box
    let half = (grid.n() / 2) as f64 * grid.wavenumber_scale();
    let j_top = (0..).take_while(|&j| tcm_core::lp::shell_bounds(j).1 <= half).last().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappas = [0.5, 1.0, 1.5, 2.0];
    let mut stats: Vec<(f64, f64, f64, f64, f64)> = kappas
        .iter()
        .map(|&k| (k, f64::INFINITY, 0.0, 0.75f64.powf(k), (8.0f64 / 3.0).powf(k)))
        .collect();
    let mut violations = 0;
    for t in 0..trials {
        let j = (t as i32) % (j_top + 1);
        let h = random_shell_field(grid, j, &mut rng);
        for s in stats.iter_mut() {
            let r = bernstein_ratio(&h, j, s.0)?;
            s.1 = s.1.min(r);
            s.2 = s.2.max(r);
            if !(r >= s.3 && r <= s.4) {
                violations += 1;
            }
        }
    }
    Ok(FilterAudit {
        partition_defect: bank.partition_defect(),
        reconstruction_error,
        bernstein_trials: trials,
        bernstein: stats,
        bernstein_violations: violations,
        bank: bank.report(),
    })
}

fn lp_suite() -> Check {
    let g = Grid::with_size(128).map_err(e)?;
    let a = filter_audit(&g, 50, 3).map_err(e)?;
    let ok = a.partition_defect <= 1e-13 && a.reconstruction_error <= 1e-12 && a.bernstein_violations == 0;
    Ok((
        ok,
        format!(
            "partition {:.1e} <= 1e-13, reconstruction {:.1e} <= 1e-12, {} Bernstein violations in 50 fields x 4 kappas",
            a.partition_defect, a.reconstruction_error, a.bernstein_violations
        ),
    ))
}

fn semigroup_decay() -> Check {
    let g = Grid::with_size(128).map_err(e)?;
    let bank = DyadicFilterBank::new(&g).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut outside = vec![];
    let mut cross = vec![];
    let mut ok = true;
    for gamma in [1.0, 2.0, 3.0] {
        let (mut js, mut logs) = (vec![], vec![]);
        for j in 1..=4 {
            let scale = 2f64.powf(-(j as f64) * gamma);
            let ts: Vec<f64> = (0..=16).map(|i| i as f64 * 0.25 * scale).collect();
            // average over a few draws to tame lattice noise at small j
            let mut slope = 0.0;
            for _ in 0..4 {
                let h = random_shell_field(&g, j, &mut rng);
                let fit = semigroup_block_decay(&bank, &h, j, gamma, &ts).map_err(e)?;
                if !fit.within_bracket() {
                    outside.push(format!("j={j} gamma={gamma} slope={:.3}", fit.slope));
                }
                slope += fit.slope / 4.0;
            }
            js.push(j as f64);
            logs.push((-slope).log2());
        }
        let (fit, _) = least_squares(&js, &logs).map_err(e)?;
        let base = 2f64.powf(fit);
        let target = 2f64.powf(gamma);
        let rel = (base - target).abs() / target;
        ok &= rel <= 0.1;
        cross.push(format!("gamma={gamma}: 2^{fit:.3}={base:.3} vs {target} ({:.1}%)", 100.0 * rel));
    }
    ok &= outside.is_empty();
    Ok((
        ok,
        format!(
            "{} fits outside shell brackets; cross-j within 10%: {}",
            outside.len(),
            cross.join(", ")
        ),
    ))
}

fn operator_reduction() -> Check {
    let g = Grid::with_size(64).map_err(e)?;
    let s0 = InitialData::RandomSmooth(RandomSpectrum {
        seed: 8,
        ..RandomSpectrum::default()
    })
    .build(&g)
    .map_err(e)?;
    let a = Model::new(&g, DissipationSpec::LogSupercritical { g: GFunction::One }).map_err(e)?;
    let b = Model::new(&g, DissipationSpec::Fractional { alpha: 2.0, beta: 0.0 }).map_err(e)?;
    let dt = 2e-3;
    let mut pa = Stepper::new(a, fixed(dt, 1.0)).map_err(e)?;
    let mut pb = Stepper::new(b, fixed(dt, 1.0)).map_err(e)?;
    let (mut sa, mut sb) = (s0.clone(), s0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        sa = pa.step(&sa, dt).map_err(e)?;
        sb = pb.step(&sb, dt).map_err(e)?;
        worst = worst.max(sa.max_abs_diff(&sb));
    }
    Ok((
        worst <= 1e-12,
        format!("max coefficient difference {worst:.2e} <= 1e-12 over 100 steps, n=64"),
    ))
}

fn growth_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for m in [2.0f64, 3.0, 4.0] {
        let got = growth_condition_partial(&GFunction::One, (m * m).exp()).map_err(e)?;
        worst = worst.max((got - 2.0 * (m - 1.0)).abs());
    }
    Ok((worst <= 1e-8, format!("max |I(e^(m^2)) - 2(m-1)| = {worst:.2e} <= 1e-8, m in 2..4")))
}

/// A self-contained configuration used by the run-based checks.
pub fn probe_config(dissipation: &str, n: usize, t_end: f64, dir: &Path) -> Result<RunConfig, String> {
    let text = format!(
        r#"
[grid]
n = {n}

[dissipation]
{dissipation}

[initial]
kind = "random-smooth"
seed = 2024
spectrum_slope = -2.0
cutoff = 6.0
amplitude = 0.5

[scheme]
dt = 2e-3
cfl = 0.5
t_end = {t_end}

[monitor]
sample_interval = 10

[output]
dir = "{}"
timestamped = false
"#,
        dir.display()
    );
    parse_config(&text, &[]).map_err(e)
}

/// Column `name` of a diagnostics CSV.
pub fn csv_column(text: &str, name: &str) -> Result<Vec<f64>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    let col = header
        .split(',')
        .position(|h| h == name)
        .ok_or_else(|| format!("no column {name}"))?;
    lines
        .map(|l| {
            l.split(',')
                .nth(col)
                .ok_or("short row")?
                .parse::<f64>()
                .map_err(e)
        })
        .collect()
}

fn regime_probe(scratch: &Path) -> Check {
    let mut ok = true;
    let mut notes = vec![];
    for (label, dissipation) in [
        ("alpha=1.5,beta=0.5", "variant = \"fractional\"\nalpha = 1.5\nbeta = 0.5"),
        ("log g=sqrt-log", "variant = \"log-supercritical\"\ng = \"sqrt-log\""),
    ] {
        let dir = scratch.join(format!("probe-{}", notes.len()));
        let cfg = probe_config(dissipation, 256, 5.0, &dir)?;
        let rep = run_single(&cfg).map_err(e)?;
        let csv = std::fs::read_to_string(dir.join("diagnostics.csv")).map_err(e)?;
        let bkm = csv_column(&csv, "bkm_integral")?;
        let monotone = bkm.windows(2).all(|w| w[1] >= w[0]) && bkm.iter().all(|x| x.is_finite());
        let mut bounded = true;
        for s in &cfg.monitor.sobolev {
            bounded &= csv_column(&csv, &format!("hs_{s}"))?
                .iter()
                .all(|x| x.is_finite() && *x <= cfg.tolerances.blowup_threshold);
        }
        let clean = rep.halt == HaltFlag::Completed && (rep.final_time - 5.0).abs() < 1e-9;
        let fast = rep.wall_seconds < 600.0;
        ok &= clean && monotone && bounded && fast;
        notes.push(format!(
            "{label}: halt={} t={:.3} bkm={:.3} monotone={monotone} bounded={bounded} {:.0} s",
            rep.halt, rep.final_time, rep.bkm_integral, rep.wall_seconds
        ));
    }
    Ok((ok, format!("n=256 T=5; {}", notes.join("; "))))
}

fn determinism_and_resume(scratch: &Path) -> Check {
    let dissipation = "variant = \"fractional\"\nalpha = 1.5\nbeta = 0.5";
    let run = |name: &str, snap: u64| -> Result<(RunConfig, crate::runner::RunReport), String> {
        let mut cfg = probe_config(dissipation, 32, 1.0, &scratch.join(name))?;
        cfg.output.snapshot_interval = snap;
        let rep = run_single(&cfg).map_err(e)?;
        Ok((cfg, rep))
    };
    let (_, a) = run("det-a", 50)?;
    let (_, b) = run("det-b", 50)?;
    let csv_a = std::fs::read(a.run_dir.join("diagnostics.csv")).map_err(e)?;
    let csv_b = std::fs::read(b.run_dir.join("diagnostics.csv")).map_err(e)?;
    let identical = csv_a == csv_b;

    let (mut cfg, straight) = run("straight", 50)?;
    let mid = straight
        .snapshots
        .iter()
        .find(|p| p.file_name().is_some_and(|n| n.to_string_lossy().contains("00000100")))
        .ok_or("no snapshot at step 100")?
        .clone();
    cfg.output.dir = scratch.join("resumed");
    let resumed = resume(&mid, &cfg).map_err(e)?;
    let load = |p: &Path| Snapshot::load(p).map(|s| s.state).map_err(e);
    let end_a = load(straight.snapshots.last().ok_or("no final snapshot")?)?;
    let end_b = load(resumed.snapshots.last().ok_or("no final snapshot")?)?;
    let diff = end_a.max_abs_diff(&end_b);
    let same_step = straight.final_step == resumed.final_step;
    let bkm = (straight.bkm_integral - resumed.bkm_integral).abs();
    Ok((
        identical && same_step && diff <= 1e-12 && bkm <= 1e-12,
        format!(
            "rerun csv identical={identical} ({} bytes); split vs straight max diff {diff:.2e} <= 1e-12, bkm diff {bkm:.1e}, steps {} vs {}",
            csv_a.len(),
            resumed.final_step,
            straight.final_step
        ),
    ))
}
