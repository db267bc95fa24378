//! Slowly growing weights `g(tau) >= 1` for the log-supercritical operator
//! `L` with symbol `|k|^2 / g(|k|)`.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GFunction {
    /// `g = 1`; `L` reduces to `-Laplacian`.
    One,
    /// `[ln(e + tau)]^{1/2}`
    SqrtLog,
    /// `[ln(e + tau)]^{1/2} ln(e + ln(e + tau))`
    SqrtLogLogLog,
    /// `[ln(e + tau)]^{1/2} ln(e + ln(e + tau)) ln(e + ln(e + ln(e + tau)))`
    SqrtLogLogLogLogLog,
    /// Piecewise-linear table of `(tau, g)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::One => write!(f, "one"),
            GFunction::SqrtLog => write!(f, "sqrt-log"),
            GFunction::SqrtLogLogLog => write!(f, "sqrt-log-loglog"),
            GFunction::SqrtLogLogLogLogLog => write!(f, "sqrt-log-loglog-logloglog"),
            GFunction::Table(knots) => write!(f, "table[{}]", knots.len()),
        }
    }
}

impl GFunction {
    /// The three log-type examples satisfying the divergence condition.
    pub fn log_family() -> [GFunction; 3] {
        [
            GFunction::SqrtLog,
            GFunction::SqrtLogLogLog,
            GFunction::SqrtLogLogLogLogLog,
        ]
    }

    pub fn parse(name: &str) -> Result<GFunction> {
        match name {
            "one" | "1" => Ok(GFunction::One),
            "sqrt-log" => Ok(GFunction::SqrtLog),
            "sqrt-log-loglog" => Ok(GFunction::SqrtLogLogLog),
            "sqrt-log-loglog-logloglog" => Ok(GFunction::SqrtLogLogLogLogLog),
            other => Err(Error::Config(format!("unknown g-function '{other}'"))),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            GFunction::Table(knots) => interpolate(knots, tau),
            _ => self.eval_log(tau.ln()),
        }
    }

    /// `g(tau)` given `ln tau`, usable where `tau` itself would overflow.
    pub fn eval_log(&self, ln_tau: f64) -> f64 {
        // ln(e + tau) without forming tau when it is huge
        let log1 = if ln_tau > 30.0 {
            ln_tau + (E * (-ln_tau).exp()).ln_1p()
        } else {
            (E + ln_tau.exp()).ln()
        };
        let log2 = || (E + log1).ln();
        match self {
            GFunction::One => 1.0,
            GFunction::SqrtLog => log1.sqrt(),
            GFunction::SqrtLogLogLog => log1.sqrt() * log2(),
            GFunction::SqrtLogLogLogLogLog => log1.sqrt() * log2() * (E + log2()).ln(),
            GFunction::Table(knots) => interpolate(knots, ln_tau.exp()),
        }
    }

    /// Checks `g >= 1` and monotonicity on a log-spaced sample of `tau`
    /// (`0` plus `points` values spanning `1e-3 .. 1e12`).
    pub fn validate(&self, points: usize) -> Result<()> {
        if let GFunction::Table(knots) = self {
            if knots.is_empty() {
                return Err(Error::Invariant("g table is empty".into()));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Invariant(
                    "g table abscissae must be strictly increasing".into(),
                ));
            }
        }
        let points = points.max(2);
        let mut prev = self.eval(0.0);
        let check = |tau: f64, prev: &mut f64| -> Result<()> {
            let g = self.eval(tau);
            if !(g >= 1.0) {
                return Err(Error::Invariant(format!("g({tau}) = {g} < 1")));
            }
            if g < *prev {
                return Err(Error::Invariant(format!("g decreases near tau = {tau}")));
            }
            *prev = g;
            Ok(())
        };
        check(0.0, &mut prev)?;
        for i in 0..points {
            let exponent = -3.0 + 15.0 * i as f64 / (points - 1) as f64;
            check(10f64.powf(exponent), &mut prev)?;
        }
        Ok(())
    }
}

fn interpolate(knots: &[(f64, f64)], tau: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if tau <= first.0 {
        return first.1;
    }
    if tau >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|&(t, _)| t <= tau);
    let (t0, g0) = knots[i - 1];
    let (t1, g1) = knots[i];
    g0 + (g1 - g0) * (tau - t0) / (t1 - t0)
}
