//! Time integration with the linear dissipation treated exactly.
//!
//! For `w_t = -m(k) w + N(w)` the ETDRK2 step (Cox-Matthews) is
//!
//! ```text
//! a       = e^{-h m} w + h phi1(-h m) N(w)
//! w_{n+1} = a + h phi2(-h m) (N(a) - N(w))
//! ```
//!
//! with `phi1(z) = (e^z - 1)/z` and `phi2(z) = (e^z - 1 - z)/z^2`. For `m = 0`
//! this is Heun's method. `u` is re-projected after every step.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, HaltFlag, Monitor, RunningIntegrals};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::model::{Model, TcmState, Tendency};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exponential integrator; exact on the dissipative part.
    Etdrk2,
    /// Heun with the dissipation treated explicitly.
    Rk2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Fixed step, or the upper cap when `adaptive` is set.
    pub dt: f64,
    pub adaptive: bool,
    pub cfl: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    pub max_steps: u64,
    /// Below this `h m(k)` the phi-functions use their Taylor series.
    pub phi_series_threshold: f64,
    /// Guards the CFL denominator for the zero state.
    pub cfl_epsilon: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            dt: 1e-2,
            adaptive: true,
            cfl: 0.5,
            scheme: Scheme::Etdrk2,
            t_end: 1.0,
            max_steps: 1_000_000,
            phi_series_threshold: 1e-2,
            cfl_epsilon: 1e-12,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl number {} not in (0, 1]", self.cfl)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// `e^{-z}`, `phi1(-z)` and `phi2(-z)` for `z = h m >= 0`.
pub fn phi_functions(z: f64, series_threshold: f64) -> (f64, f64, f64) {
    let e = (-z).exp();
    if z < series_threshold {
        // alternating series in z; terms through z^6 keep 1e-16 accuracy
        let mut phi1 = 0.0;
        let mut phi2 = 0.0;
        let mut term = 1.0; // (-z)^n / n!
        let mut fact_shift1 = 1.0; // (n+1)!/n!
        let mut fact_shift2 = 2.0; // (n+2)!/n!
        for n in 0..8 {
            phi1 += term / fact_shift1;
            phi2 += term / fact_shift2;
            term *= -z / (n + 1) as f64;
            fact_shift1 = (n + 2) as f64;
            fact_shift2 = ((n + 2) * (n + 3)) as f64;
        }
        (e, phi1, phi2)
    } else {
        let phi1 = (1.0 - e) / z;
        let phi2 = (z - 1.0 + e) / (z * z);
        (e, phi1, phi2)
    }
}

struct EtdTable {
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl EtdTable {
    fn new(symbol: &[f64], dt: f64, threshold: f64) -> Self {
        let mut t = EtdTable {
            decay: Vec::with_capacity(symbol.len()),
            phi1: Vec::with_capacity(symbol.len()),
            phi2: Vec::with_capacity(symbol.len()),
        };
        for &m in symbol {
            let (e, p1, p2) = phi_functions(dt * m, threshold);
            t.decay.push(e);
            t.phi1.push(p1);
            t.phi2.push(p2);
        }
        t
    }
}

/// `decay * w + h * phi1 * n`
fn etd_stage(w: &SpectralField, n: &SpectralField, t: &EtdTable, h: f64) -> SpectralField {
    let mut out = w.clone();
    for c in 0..w.components() {
        let nc = n.coeffs(c);
        for (idx, z) in out.coeffs_mut(c).iter_mut().enumerate() {
            *z = t.decay[idx] * *z + h * t.phi1[idx] * nc[idx];
        }
    }
    out
}

/// `a + h * phi2 * (n1 - n0)`
fn etd_correct(a: &mut SpectralField, n0: &SpectralField, n1: &SpectralField, t: &EtdTable, h: f64) {
    for c in 0..a.components() {
        let (x, y) = (n0.coeffs(c), n1.coeffs(c));
        for (idx, z) in a.coeffs_mut(c).iter_mut().enumerate() {
            *z += h * t.phi2[idx] * (y[idx] - x[idx]);
        }
    }
}

/// Advances states of one [`Model`]; caches the exponential tables for the
/// most recent step size.
pub struct Stepper {
    model: Model,
    config: SchemeConfig,
    cache: Option<(f64, [EtdTable; 3])>,
}

impl Stepper {
    pub fn new(model: Model, config: SchemeConfig) -> Result<Stepper> {
        config.validate()?;
        Ok(Stepper {
            model,
            config,
            cache: None,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// `cfl * dx / (max|u| + max|v| + eps)`, capped by the configured `dt`;
    /// the fixed `dt` when not adaptive.
    pub fn cfl_dt(&self, state: &TcmState) -> f64 {
        cfl_dt(state, &self.config)
    }

    fn tables(&mut self, dt: f64) -> &[EtdTable; 3] {
        if self.cache.as_ref().map(|c| c.0) != Some(dt) {
            let th = self.config.phi_series_threshold;
            let zero = vec![0.0; self.model.grid().len()];
            self.cache = Some((
                dt,
                [
                    EtdTable::new(self.model.u_symbol(), dt, th),
                    EtdTable::new(self.model.v_symbol(), dt, th),
                    EtdTable::new(&zero, dt, th),
                ],
            ));
        }
        &self.cache.as_ref().expect("filled above").1
    }

    /// One step of size `dt`. The returned state may be non-finite if the
    /// step itself blew up; the caller checks.
    pub fn step(&mut self, state: &TcmState, dt: f64) -> Result<TcmState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("step size must be > 0, got {dt}")));
        }
        if !state.is_finite() {
            return Err(Error::BlowUp(format!("non-finite state at t = {}", state.time)));
        }
        let mut next = match self.config.scheme {
            Scheme::Etdrk2 => self.etdrk2(state, dt)?,
            Scheme::Rk2 => self.heun(state, dt)?,
        };
        next.project_u()?;
        next.time = state.time + dt;
        Ok(next)
    }

    fn explicit(&self, state: &TcmState) -> Result<Tendency> {
        match self.model.explicit_terms(state) {
            // a non-finite stage propagates into the result and is flagged there
            Err(Error::BlowUp(_)) => Ok(Tendency {
                u: state.u.scaled(f64::NAN),
                v: state.v.scaled(f64::NAN),
                theta: state.theta.scaled(f64::NAN),
            }),
            other => other,
        }
    }

    fn etdrk2(&mut self, state: &TcmState, h: f64) -> Result<TcmState> {
        let n0 = self.explicit(state)?;
        let [tu, tv, tt] = self.tables(h);
        let stage = TcmState {
            u: etd_stage(&state.u, &n0.u, tu, h),
            v: etd_stage(&state.v, &n0.v, tv, h),
            theta: etd_stage(&state.theta, &n0.theta, tt, h),
            time: state.time + h,
        };
        let n1 = self.explicit(&stage)?;
        let [tu, tv, tt] = self.tables(h);
        let mut next = stage;
        etd_correct(&mut next.u, &n0.u, &n1.u, tu, h);
        etd_correct(&mut next.v, &n0.v, &n1.v, tv, h);
        etd_correct(&mut next.theta, &n0.theta, &n1.theta, tt, h);
        Ok(next)
    }

    fn heun(&mut self, state: &TcmState, h: f64) -> Result<TcmState> {
        let full = |s: &TcmState, this: &Self| -> Result<Tendency> {
            let mut t = this.explicit(s)?;
            t.u.axpy(-1.0, &s.u.apply_symbol(this.model.u_symbol()));
            t.v.axpy(-1.0, &s.v.apply_symbol(this.model.v_symbol()));
            Ok(t)
        };
        let k0 = full(state, self)?;
        let mut stage = state.clone();
        stage.u.axpy(h, &k0.u);
        stage.v.axpy(h, &k0.v);
        stage.theta.axpy(h, &k0.theta);
        let k1 = full(&stage, self)?;
        let mut next = state.clone();
        for (f, a, b) in [
            (&mut next.u, &k0.u, &k1.u),
            (&mut next.v, &k0.v, &k1.v),
            (&mut next.theta, &k0.theta, &k1.theta),
        ] {
            f.axpy(0.5 * h, a);
            f.axpy(0.5 * h, b);
        }
        Ok(next)
    }
}

pub fn cfl_dt(state: &TcmState, cfg: &SchemeConfig) -> f64 {
    if !cfg.adaptive {
        return cfg.dt;
    }
    let speed = state.u.max_pointwise() + state.v.max_pointwise() + cfg.cfl_epsilon;
    (cfg.cfl * state.grid().spacing() / speed).min(cfg.dt)
}

/// Position of a run, persisted with snapshots so a resumed run continues
/// its step count and time integrals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub integrals: RunningIntegrals,
}

/// Receives the output of [`run`].
pub trait RunSink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()>;
    fn snapshot(&mut self, state: &TcmState, checkpoint: &Checkpoint) -> Result<()>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSchedule {
    /// Steps between snapshots; `None` disables periodic snapshots.
    pub snapshot_interval: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub halt: HaltFlag,
    pub halt_reason: String,
    pub steps_taken: u64,
    pub final_step: u64,
    pub final_state: TcmState,
    pub last_record: Option<DiagnosticsRecord>,
    pub checkpoint: Checkpoint,
}

/// Runs `state0` to `t_end`, emitting records every `sample_interval` steps
/// (and on the final step) and snapshots on the schedule.
///
/// A fresh run (`start.integrals.last` empty) records the initial state; a
/// resumed run starts from the checkpoint and does not repeat it.
pub fn run(
    state0: TcmState,
    stepper: &mut Stepper,
    monitor: &mut Monitor,
    schedule: OutputSchedule,
    start: Checkpoint,
    sink: &mut dyn RunSink,
) -> Result<RunSummary> {
    let cfg = stepper.config().clone();
    let sample = monitor.config().sample_interval as u64;
    let threshold = monitor.config().blowup_threshold;
    let resumed = start.integrals.last.is_some();
    monitor.integrals = start.integrals;

    let mut state = state0;
    let mut step = start.step;
    let mut taken = 0u64;
    let mut last_record = None;
    let t_end = cfg.t_end;
    let done = |s: &TcmState| s.time >= t_end * (1.0 - 1e-14);

    let finish = |halt: HaltFlag,
                  reason: String,
                  state: TcmState,
                  step: u64,
                  taken: u64,
                  last: Option<DiagnosticsRecord>,
                  monitor: &Monitor| RunSummary {
        halt,
        halt_reason: reason,
        steps_taken: taken,
        final_step: step,
        final_state: state,
        last_record: last,
        checkpoint: Checkpoint {
            step,
            integrals: monitor.integrals.clone(),
        },
    };

    if resumed && done(&state) {
        let reason = "t_end does not exceed the resume time".to_string();
        return Ok(finish(HaltFlag::Completed, reason, state, step, 0, None, monitor));
    }
    if !resumed {
        let mut rec = monitor.observe(&state, stepper.model(), step)?;
        let crossing = rec.threshold_crossing(threshold);
        let halt = if crossing.is_some() {
            Some(HaltFlag::BlowUp)
        } else if done(&state) {
            Some(HaltFlag::Completed)
        } else {
            None
        };
        if let Some(h) = halt {
            rec.halt = h;
        }
        sink.record(&rec)?;
        if let Some(h) = halt {
            let reason = crossing
                .map(|(k, v)| format!("{k} = {v:e} crossed threshold"))
                .unwrap_or_else(|| "reached t_end".into());
            return Ok(finish(h, reason, state, step, 0, Some(rec), monitor));
        }
        last_record = Some(rec);
    }

    loop {
        let dt = stepper.cfl_dt(&state).min(t_end - state.time);
        let next = match stepper.step(&state, dt) {
            Ok(s) => s,
            Err(Error::BlowUp(msg)) => {
                return Ok(finish(HaltFlag::BlowUp, msg, state, step, taken, last_record, monitor));
            }
            Err(e) => return Err(e),
        };
        state = next;
        step += 1;
        taken += 1;

        let energy = 0.5 * state.norm_sq();
        let blown = !(energy.is_finite() && energy <= threshold);
        let last = done(&state) || taken >= cfg.max_steps || blown;
        if step % sample == 0 || last {
            let mut rec = monitor.observe(&state, stepper.model(), step)?;
            let crossing = rec.threshold_crossing(threshold);
            let halt = if crossing.is_some() {
                HaltFlag::BlowUp
            } else if done(&state) {
                HaltFlag::Completed
            } else if taken >= cfg.max_steps {
                HaltFlag::MaxSteps
            } else {
                HaltFlag::None
            };
            rec.halt = halt;
            sink.record(&rec)?;
            let reason = match (&halt, crossing) {
                (HaltFlag::BlowUp, Some((k, v))) => format!("{k} = {v:e} crossed threshold"),
                (HaltFlag::Completed, _) => "reached t_end".into(),
                (HaltFlag::MaxSteps, _) => format!("max_steps = {} reached", cfg.max_steps),
                _ => String::new(),
            };
            last_record = Some(rec);
            if halt != HaltFlag::None {
                if halt != HaltFlag::BlowUp {
                    sink.snapshot(
                        &state,
                        &Checkpoint {
                            step,
                            integrals: monitor.integrals.clone(),
                        },
                    )?;
                }
                return Ok(finish(halt, reason, state, step, taken, last_record, monitor));
            }
        }
        if let Some(every) = schedule.snapshot_interval {
            if every > 0 && step % every == 0 {
                // snapshots are only consistent with the integrals at sample points
                if step % sample == 0 {
                    sink.snapshot(
                        &state,
                        &Checkpoint {
                            step,
                            integrals: monitor.integrals.clone(),
                        },
                    )?;
                }
            }
        }
    }
}

/// Collects everything in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(TcmState, Checkpoint)>,
}

impl RunSink for MemorySink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }

    fn snapshot(&mut self, state: &TcmState, checkpoint: &Checkpoint) -> Result<()> {
        self.snapshots.push((state.clone(), checkpoint.clone()));
        Ok(())
    }
}
