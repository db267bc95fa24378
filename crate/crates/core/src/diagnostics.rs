//! Monitored quantities: energy law, cancellation residuals, the
//! `int ||grad u||_inf` integral, sigma-level energies and norm series.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{max_pointwise, SpectralField};
use crate::gfunc::GFunction;
use crate::lp::DyadicFilterBank;
use crate::model::{advect, stretch, tensor_divergence, Model, TcmState};
use crate::ops::{divergence, gradient, partial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// `sigma` in `(0, 1)` for `X` and `Y`.
    pub sigma: f64,
    /// Sobolev indices whose norms are recorded.
    pub sobolev: Vec<f64>,
    pub blowup_threshold: f64,
    /// Steps between records.
    pub sample_interval: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            sigma: 0.5,
            sobolev: vec![1.0, 2.0],
            blowup_threshold: 1e12,
            sample_interval: 1,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Domain(format!("sigma = {} not in (0, 1)", self.sigma)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Domain("blow-up threshold must be positive".into()));
        }
        if self.sample_interval == 0 {
            return Err(Error::Domain("sample interval must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltFlag {
    #[default]
    None,
    Completed,
    MaxSteps,
    BlowUp,
}

impl fmt::Display for HaltFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaltFlag::None => "none",
            HaltFlag::Completed => "completed",
            HaltFlag::MaxSteps => "max-steps",
            HaltFlag::BlowUp => "blow-up",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub t: f64,
    /// `1/2 (||u||^2 + ||v||^2 + ||theta||^2)`
    pub energy: f64,
    pub energy_u: f64,
    pub energy_v: f64,
    pub energy_theta: f64,
    pub dissipation_rate: f64,
    pub energy_balance_residual: f64,
    /// `(r1, r2)` of [`cancellation_residual`].
    pub cancellation: (f64, f64),
    pub transport_residual: f64,
    pub grad_u_linf: f64,
    pub bkm_integral: f64,
    pub x_sigma: f64,
    pub y_sigma: f64,
    /// `(s, ||(u, v, theta)||_{H^s})`
    pub hs_norms: Vec<(f64, f64)>,
    pub besov_majorant: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub mean_v: (f64, f64),
    pub div_u_norm: f64,
    pub halt: HaltFlag,
}

impl DiagnosticsRecord {
    /// Names of every value that must stay finite and below the blow-up
    /// threshold, with the value.
    pub fn monitored(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("energy".to_string(), self.energy),
            ("dissipation_rate".into(), self.dissipation_rate),
            ("grad_u_linf".into(), self.grad_u_linf),
            ("bkm_integral".into(), self.bkm_integral),
            ("x_sigma".into(), self.x_sigma),
            ("y_sigma".into(), self.y_sigma),
            ("besov_majorant".into(), self.besov_majorant),
        ];
        v.extend(self.hs_norms.iter().map(|(s, h)| (format!("hs_{s}"), *h)));
        v
    }

    /// First monitored value that is non-finite or above `threshold`.
    pub fn threshold_crossing(&self, threshold: f64) -> Option<(String, f64)> {
        self.monitored()
            .into_iter()
            .find(|(_, x)| !x.is_finite() || *x > threshold)
    }

    pub fn csv_header(sobolev: &[f64]) -> String {
        let mut cols: Vec<String> = [
            "step",
            "t",
            "energy",
            "energy_u",
            "energy_v",
            "energy_theta",
            "dissipation_rate",
            "energy_balance_residual",
            "cancellation_r1",
            "cancellation_r2",
            "transport_residual",
            "grad_u_linf",
            "bkm_integral",
            "x_sigma",
            "y_sigma",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(sobolev.iter().map(|s| format!("hs_{s}")));
        cols.extend(
            [
                "besov_majorant",
                "max_u",
                "max_v",
                "mean_v1",
                "mean_v2",
                "div_u_norm",
                "halt",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    /// One CSV row; floats use the shortest round-trip representation.
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.step.to_string()];
        let mut push = |x: f64| cols.push(format!("{x:e}"));
        for x in [
            self.t,
            self.energy,
            self.energy_u,
            self.energy_v,
            self.energy_theta,
            self.dissipation_rate,
            self.energy_balance_residual,
            self.cancellation.0,
            self.cancellation.1,
            self.transport_residual,
            self.grad_u_linf,
            self.bkm_integral,
            self.x_sigma,
            self.y_sigma,
        ] {
            push(x);
        }
        for &(_, h) in &self.hs_norms {
            push(h);
        }
        for x in [
            self.besov_majorant,
            self.max_u,
            self.max_v,
            self.mean_v.0,
            self.mean_v.1,
            self.div_u_norm,
        ] {
            push(x);
        }
        cols.push(self.halt.to_string());
        cols.join(",")
    }
}

/// `(sum_{k != 0} |k|^{2s} |f(k)|^2 + [s >= 0] |f(0)|^2)^{1/2}`, summed over
/// components.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid().clone();
    f.weighted_norm_sq(|idx| {
        let k2 = g.k_squared(idx);
        if k2 == 0.0 {
            if s >= 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            k2.powf(s)
        }
    })
    .sqrt()
}

fn state_sobolev_norm(state: &TcmState, s: f64) -> f64 {
    [&state.u, &state.v, &state.theta]
        .iter()
        .map(|f| sobolev_norm(f, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Normalized residuals of the two pairings that cancel in the energy law:
///
/// * `r1 = |<div(v (x) v), u> + <(v.grad)u, v>| / (1 + ||v||^2 ||u||_{H^1})`
/// * `r2 = |<grad theta, v> + <div v, theta>| / (1 + ||v|| ||theta||)`
pub fn cancellation_residual(state: &TcmState) -> Result<(f64, f64)> {
    state.validate()?;
    let a = tensor_divergence(&state.v)?.inner(&state.u);
    let b = stretch(&state.v, &state.u)?.inner(&state.v);
    let r1 = (a + b).abs() / (1.0 + state.v.norm_sq() * sobolev_norm(&state.u, 1.0));
    let c = gradient(&state.theta)?.inner(&state.v);
    let d = divergence(&state.v)?.inner(&state.theta);
    let r2 = (c + d).abs() / (1.0 + state.v.l2_norm() * state.theta.l2_norm());
    Ok((r1, r2))
}

/// `|<(u.grad)u, u> + <(u.grad)v, v> + <(u.grad)theta, theta>| / (1 + ||u||_{H^1} |state|^2)`.
///
/// Unlike `r1` this relies on `div u = 0`, so it responds to divergence
/// errors in `u`.
pub fn transport_residual(state: &TcmState) -> Result<f64> {
    state.validate()?;
    let s = advect(&state.u, &state.u)?.inner(&state.u)
        + advect(&state.u, &state.v)?.inner(&state.v)
        + advect(&state.u, &state.theta)?.inner(&state.theta);
    Ok(s.abs() / (1.0 + sobolev_norm(&state.u, 1.0) * state.norm_sq()))
}

/// `X = ||Lambda^sigma (u, v, theta)||^2` and `Y = sum |k|^{2 sigma} D_u(k) |u(k)|^2`,
/// which is `||L Lambda^sigma u||^2` for the log variant and
/// `||Lambda^{alpha + sigma} u||^2` for the fractional one.
pub fn sigma_energies(state: &TcmState, model: &Model, sigma: f64) -> (f64, f64) {
    let g = state.grid().clone();
    let w = |idx: usize| {
        let k2 = g.k_squared(idx);
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(sigma)
        }
    };
    let x = state.u.weighted_norm_sq(w) + state.v.weighted_norm_sq(w) + state.theta.weighted_norm_sq(w);
    let du = model.u_symbol();
    let y = state.u.weighted_norm_sq(|idx| w(idx) * du[idx]);
    (x, y)
}

/// `max |grad u|` over the collocation grid (Frobenius norm of the 2x2
/// gradient at each point).
pub fn grad_u_linf(u: &SpectralField) -> f64 {
    let mut comps = partial(u, 0).to_physical();
    comps.extend(partial(u, 1).to_physical());
    max_pointwise(&comps)
}

/// Energy-balance residuals `[E(t_i) - E(t_{i-1})] / (t_i - t_{i-1}) + (D_i + D_{i-1}) / 2`,
/// divided by `E(t_0)` when that is positive.
pub fn energy_balance_residuals(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let scale = if first.energy > 0.0 { first.energy } else { 1.0 };
    records
        .windows(2)
        .map(|w| balance_residual(&Sample::from(&w[0]), &Sample::from(&w[1]), scale))
        .collect()
}

fn balance_residual(prev: &Sample, cur: &Sample, scale: f64) -> f64 {
    let dt = cur.t - prev.t;
    if dt <= 0.0 {
        return 0.0;
    }
    ((cur.energy - prev.energy) / dt + 0.5 * (cur.dissipation_rate + prev.dissipation_rate)) / scale
}

/// Trapezoidal `int ||grad u||_inf dt` over the record stream.
pub fn bkm_integral(records: &[DiagnosticsRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].grad_u_linf + w[1].grad_u_linf))
        .sum()
}

/// `int_e^M dtau / (tau sqrt(ln tau) g(tau))`.
pub fn growth_condition_partial(g: &GFunction, m: f64) -> Result<f64> {
    if !(m > std::f64::consts::E) {
        return Err(Error::Domain(format!("upper limit M = {m} must exceed e")));
    }
    growth_condition_partial_ln(g, m.ln())
}

/// Same integral with the upper limit given as `ln M`, so that very large
/// `M` can be reached. Substituting `tau = exp(w^2)` gives
/// `int_1^{sqrt(ln M)} 2 / g(exp(w^2)) dw`, which has a smooth integrand.
pub fn growth_condition_partial_ln(g: &GFunction, ln_m: f64) -> Result<f64> {
    if !(ln_m > 1.0) {
        return Err(Error::Domain(format!("ln M = {ln_m} must exceed 1")));
    }
    let f = |w: f64| 2.0 / g.eval_log(w * w);
    Ok(adaptive_simpson(&f, 1.0, ln_m.sqrt(), 1e-13, 50))
}

/// Partial integrals at `M = e^{m^2}` for `m = 2, 4, 8, ...` (`decades`
/// entries), as `(ln M, value)`. Growth without saturation indicates the
/// divergence condition, without proving it.
pub fn growth_condition_report(g: &GFunction, decades: usize) -> Result<Vec<(f64, f64)>> {
    (1..=decades)
        .map(|i| {
            let m = 2f64.powi(i as i32);
            let ln_m = m * m;
            Ok((ln_m, growth_condition_partial_ln(g, ln_m)?))
        })
        .collect()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// The per-sample values needed to continue the running quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub energy: f64,
    pub dissipation_rate: f64,
    pub grad_u_linf: f64,
}

impl From<&DiagnosticsRecord> for Sample {
    fn from(r: &DiagnosticsRecord) -> Self {
        Sample {
            t: r.t,
            energy: r.energy,
            dissipation_rate: r.dissipation_rate,
            grad_u_linf: r.grad_u_linf,
        }
    }
}

/// Running state of the time integrals, carried across snapshot/resume.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningIntegrals {
    pub initial_energy: Option<f64>,
    pub last: Option<Sample>,
    pub bkm_integral: f64,
}

/// Computes records from states.
pub struct Monitor {
    config: MonitorConfig,
    bank: DyadicFilterBank,
    pub integrals: RunningIntegrals,
}

impl Monitor {
    pub fn new(model: &Model, config: MonitorConfig) -> Result<Monitor> {
        config.validate()?;
        Ok(Monitor {
            bank: DyadicFilterBank::new(model.grid())?,
            config,
            integrals: RunningIntegrals::default(),
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn bank(&self) -> &DyadicFilterBank {
        &self.bank
    }

    /// Computes all instantaneous diagnostics and advances the running
    /// integrals to `state.time`.
    pub fn observe(&mut self, state: &TcmState, model: &Model, step: u64) -> Result<DiagnosticsRecord> {
        let energy_u = 0.5 * state.u.norm_sq();
        let energy_v = 0.5 * state.v.norm_sq();
        let energy_theta = 0.5 * state.theta.norm_sq();
        let energy = energy_u + energy_v + energy_theta;
        let dissipation_rate = model.dissipation_rate(state);
        let grad = grad_u_linf(&state.u);
        let (x_sigma, y_sigma) = sigma_energies(state, model, self.config.sigma);
        let mean_v = state.v.mean();

        let current = Sample {
            t: state.time,
            energy,
            dissipation_rate,
            grad_u_linf: grad,
        };
        let e0 = *self.integrals.initial_energy.get_or_insert(energy);
        let scale = if e0 > 0.0 { e0 } else { 1.0 };
        let (residual, bkm) = match &self.integrals.last {
            Some(prev) => (
                balance_residual(prev, &current, scale),
                self.integrals.bkm_integral
                    + 0.5 * (current.t - prev.t) * (prev.grad_u_linf + current.grad_u_linf),
            ),
            None => (0.0, self.integrals.bkm_integral),
        };
        self.integrals.bkm_integral = bkm;
        self.integrals.last = Some(current);

        Ok(DiagnosticsRecord {
            step,
            t: state.time,
            energy,
            energy_u,
            energy_v,
            energy_theta,
            dissipation_rate,
            energy_balance_residual: residual,
            cancellation: cancellation_residual(state)?,
            transport_residual: transport_residual(state)?,
            grad_u_linf: grad,
            bkm_integral: bkm,
            x_sigma,
            y_sigma,
            hs_norms: self
                .config
                .sobolev
                .iter()
                .map(|&s| (s, state_sobolev_norm(state, s)))
                .collect(),
            besov_majorant: self.bank.besov_majorant_grad_linf(&state.u)?,
            max_u: state.u.max_pointwise(),
            max_v: state.v.max_pointwise(),
            mean_v: (mean_v[0], mean_v[1]),
            div_u_norm: divergence(&state.u)?.l2_norm(),
            halt: HaltFlag::None,
        })
    }
}
