//! Right-hand side of the zero-thermal-diffusion tropical climate model
//!
//! ```text
//! u_t + (u.grad)u + D_u u + grad p + div(v (x) v) = 0,   div u = 0
//! v_t + (u.grad)v + D_v v + grad theta + (v.grad)u = 0
//! theta_t + (u.grad)theta + div v = 0
//! ```
//!
//! with `D_u = (-lap)^alpha, D_v = (-lap)^beta` or, in the log-supercritical
//! variant, `D_u = L^2` and `D_v = 0`. Pressure is removed by the Leray
//! projection.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::gfunc::GFunction;
use crate::grid::Grid;
use crate::ops::{
    self, divergence, gradient, invert_neg_laplacian, leray_project, masked_spectral,
    truncated_physical, FourierMultiplier,
};

/// Barotropic mode `u`, first baroclinic mode `v`, temperature `theta`.
#[derive(Clone, Debug)]
pub struct TcmState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub theta: SpectralField,
    pub time: f64,
}

impl TcmState {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        TcmState {
            u: SpectralField::zeros(grid, 2),
            v: SpectralField::zeros(grid, 2),
            theta: SpectralField::zeros(grid, 1),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.u.expect_components(2)?;
        self.v.expect_components(2)?;
        self.theta.expect_components(1)?;
        self.u.expect_same_grid(&self.v)?;
        self.u.expect_same_grid(&self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.theta.is_finite()
    }

    /// `||u||^2 + ||v||^2 + ||theta||^2`
    pub fn norm_sq(&self) -> f64 {
        self.u.norm_sq() + self.v.norm_sq() + self.theta.norm_sq()
    }

    /// Pairing with a tendency, `<T_u, u> + <T_v, v> + <T_theta, theta>`.
    pub fn pair(&self, t: &Tendency) -> f64 {
        t.u.inner(&self.u) + t.v.inner(&self.v) + t.theta.inner(&self.theta)
    }

    /// Largest coefficient difference over all fields.
    pub fn max_abs_diff(&self, other: &TcmState) -> f64 {
        self.u
            .max_abs_diff(&other.u)
            .max(self.v.max_abs_diff(&other.v))
            .max(self.theta.max_abs_diff(&other.theta))
    }

    pub fn project_u(&mut self) -> Result<()> {
        self.u = leray_project(&self.u)?;
        Ok(())
    }
}

/// Time derivative of each field.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub u: SpectralField,
    pub v: SpectralField,
    pub theta: SpectralField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DissipationSpec {
    Fractional { alpha: f64, beta: f64 },
    LogSupercritical { g: GFunction },
    None,
}

impl fmt::Display for DissipationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DissipationSpec::Fractional { alpha, beta } => {
                write!(f, "fractional(alpha={alpha},beta={beta})")
            }
            DissipationSpec::LogSupercritical { g } => write!(f, "log-supercritical(g={g})"),
            DissipationSpec::None => write!(f, "none"),
        }
    }
}

impl DissipationSpec {
    /// `alpha + beta >= 2` and `1 < alpha < 2`.
    pub fn in_fractional_regime(&self) -> bool {
        matches!(*self, DissipationSpec::Fractional { alpha, beta }
            if alpha + beta >= 2.0 && 1.0 < alpha && alpha < 2.0)
    }

    pub fn validate(&self, g_check_points: usize) -> Result<()> {
        match self {
            DissipationSpec::Fractional { alpha, beta } => {
                for (name, x) in [("alpha", alpha), ("beta", beta)] {
                    if !(*x >= 0.0 && x.is_finite()) {
                        return Err(Error::Domain(format!("{name} must be >= 0, got {x}")));
                    }
                }
                Ok(())
            }
            DissipationSpec::LogSupercritical { g } => g.validate(g_check_points),
            DissipationSpec::None => Ok(()),
        }
    }
}

/// Symbol table for `(-lap)^gamma`, where `gamma = 0` means "no dissipation".
fn dissipation_table(grid: &Grid, gamma: f64) -> Result<FourierMultiplier> {
    if gamma == 0.0 {
        return Ok(FourierMultiplier {
            name: "0".into(),
            symbol: vec![0.0; grid.len()],
        });
    }
    FourierMultiplier::fractional(grid, gamma)
}

/// The system on a grid with its dissipation symbols tabulated.
#[derive(Clone, Debug)]
pub struct Model {
    grid: Arc<Grid>,
    spec: DissipationSpec,
    u_dissipation: FourierMultiplier,
    v_dissipation: FourierMultiplier,
    /// When false the explicit part (advection, stretching, `v (x) v`
    /// and the `theta`-`v` coupling) is dropped, leaving pure dissipation.
    nonlinear: bool,
}

impl Model {
    pub fn new(grid: &Arc<Grid>, spec: DissipationSpec) -> Result<Model> {
        spec.validate(64)?;
        let zero = || dissipation_table(grid, 0.0);
        let (u_dissipation, v_dissipation) = match &spec {
            DissipationSpec::Fractional { alpha, beta } => {
                (dissipation_table(grid, *alpha)?, dissipation_table(grid, *beta)?)
            }
            DissipationSpec::LogSupercritical { g } => {
                (FourierMultiplier::log_supercritical(grid, g, true)?, zero()?)
            }
            DissipationSpec::None => (zero()?, zero()?),
        };
        Ok(Model {
            grid: grid.clone(),
            spec,
            u_dissipation,
            v_dissipation,
            nonlinear: true,
        })
    }

    pub fn with_nonlinear(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn nonlinear(&self) -> bool {
        self.nonlinear
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn spec(&self) -> &DissipationSpec {
        &self.spec
    }

    /// Symbol of `D_u`, i.e. `|k|^{2 alpha}` or `|k|^4 / g^2`.
    pub fn u_symbol(&self) -> &[f64] {
        &self.u_dissipation.symbol
    }

    pub fn v_symbol(&self) -> &[f64] {
        &self.v_dissipation.symbol
    }

    /// `<D_u u, u> + <D_v v, v>`, i.e. `||Lambda^alpha u||^2 + ||Lambda^beta v||^2`
    /// or `||L u||^2`.
    pub fn dissipation_rate(&self, state: &TcmState) -> f64 {
        let u = self.u_symbol();
        let v = self.v_symbol();
        state.u.weighted_norm_sq(|i| u[i]) + state.v.weighted_norm_sq(|i| v[i])
    }

    /// Explicit (non-dissipative) part of the tendency.
    pub fn explicit_terms(&self, state: &TcmState) -> Result<Tendency> {
        state.validate()?;
        if !state.is_finite() {
            return Err(Error::BlowUp(format!(
                "non-finite coefficient at t = {}",
                state.time
            )));
        }
        if !state.u.grid().same_as(&self.grid) {
            return Err(Error::Config("state grid does not match model grid".into()));
        }
        if !self.nonlinear {
            return Ok(Tendency {
                u: SpectralField::zeros(&self.grid, 2),
                v: SpectralField::zeros(&self.grid, 2),
                theta: SpectralField::zeros(&self.grid, 1),
            });
        }

        let u_phys = truncated_physical(&state.u);
        let v_phys = truncated_physical(&state.v);
        let grad_u = Gradients::of(&state.u);

        let mut tu = advect_phys(&self.grid, &u_phys, &grad_u);
        tu.axpy(1.0, &tensor_divergence_phys(&self.grid, &v_phys));
        let mut tu = leray_project(&tu)?;
        tu.scale(-1.0);

        let mut tv = advect_phys(&self.grid, &u_phys, &Gradients::of(&state.v));
        tv.axpy(1.0, &advect_phys(&self.grid, &v_phys, &grad_u));
        tv.axpy(1.0, &gradient(&state.theta)?);
        tv.scale(-1.0);

        let mut tt = advect_phys(&self.grid, &u_phys, &Gradients::of(&state.theta));
        tt.axpy(1.0, &divergence(&state.v)?);
        tt.scale(-1.0);

        Ok(Tendency {
            u: tu,
            v: tv,
            theta: tt,
        })
    }

    /// Full tendency: explicit terms minus `D_u u`, `D_v v`.
    pub fn rhs(&self, state: &TcmState) -> Result<Tendency> {
        let mut t = self.explicit_terms(state)?;
        t.u.axpy(-1.0, &state.u.apply_symbol(self.u_symbol()));
        t.v.axpy(-1.0, &state.v.apply_symbol(self.v_symbol()));
        Ok(t)
    }
}

/// Truncated physical-space gradients `d_i f_j` of every component `j`,
/// stored as `[j][i]`.
struct Gradients(Vec<[Vec<f64>; 2]>);

impl Gradients {
    fn of(f: &SpectralField) -> Gradients {
        let t = f.truncated();
        if t.is_scalar() {
            let [d1, d2]: [Vec<f64>; 2] = gradient(&t)
                .expect("scalar field")
                .to_physical()
                .try_into()
                .expect("two components");
            return Gradients(vec![[d1, d2]]);
        }
        let d1 = ops::partial(&t, 0).to_physical();
        let d2 = ops::partial(&t, 1).to_physical();
        Gradients(d1.into_iter().zip(d2).map(|(a, b)| [a, b]).collect())
    }
}

/// `(w . grad) f` on the grid, masked.
fn advect_phys(grid: &Arc<Grid>, w: &[Vec<f64>], grad_f: &Gradients) -> SpectralField {
    let out: Vec<Vec<f64>> = grad_f
        .0
        .iter()
        .map(|[d1, d2]| {
            (0..grid.len())
                .map(|p| w[0][p] * d1[p] + w[1][p] * d2[p])
                .collect()
        })
        .collect();
    masked_spectral(grid, &out)
}

/// `sum_i d_i (v_i v_j)` for each `j`.
fn tensor_divergence_phys(grid: &Arc<Grid>, v: &[Vec<f64>]) -> SpectralField {
    let prod = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
    let v11 = masked_spectral(grid, &[prod(&v[0], &v[0])]);
    let v12 = masked_spectral(grid, &[prod(&v[0], &v[1])]);
    let v22 = masked_spectral(grid, &[prod(&v[1], &v[1])]);
    // row j: d_1(v_1 v_j) + d_2(v_2 v_j)
    let first = ops::partial(&v11, 0).add(&ops::partial(&v12, 1));
    let second = ops::partial(&v12, 0).add(&ops::partial(&v22, 1));
    first.stack(second)
}

/// `div(v (x) v)`, row-wise `sum_i d_i(v_i v_j)`, dealiased.
pub fn tensor_divergence(v: &SpectralField) -> Result<SpectralField> {
    v.expect_components(2)?;
    Ok(tensor_divergence_phys(v.grid(), &truncated_physical(v)))
}

/// `(u . grad) f` for scalar or vector `f`, dealiased.
pub fn advect(u: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
    u.expect_components(2)?;
    u.expect_same_grid(f)?;
    Ok(advect_phys(u.grid(), &truncated_physical(u), &Gradients::of(f)))
}

/// `(v . grad) u`, dealiased; no divergence assumption on `v`.
pub fn stretch(v: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    v.expect_components(2)?;
    u.expect_components(2)?;
    advect(v, u)
}

/// Pressure from `Delta p = -div((u.grad)u + div(v (x) v))`, mean-free.
/// Diagnostic only: the time stepper eliminates `p` by projection.
///
/// Returns the pressure and the relative divergence of `u`; callers treat a
/// value above their tolerance as a warning.
pub fn recover_pressure(state: &TcmState) -> Result<(SpectralField, f64)> {
    state.validate()?;
    let forcing = advect(&state.u, &state.u)?.add(&tensor_divergence(&state.v)?);
    let p = invert_neg_laplacian(&divergence(&forcing)?);
    let div_u = divergence(&state.u)?.l2_norm() / state.u.l2_norm().max(f64::MIN_POSITIVE);
    Ok((p, div_u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{convolve, derivative, max_abs_diff, random_field, random_state};

    fn taylor_green(grid: &Arc<Grid>) -> SpectralField {
        SpectralField::vector_from_fn(
            grid,
            |x, y| x.sin() * y.cos(),
            |x, y| -x.cos() * y.sin(),
        )
    }

    fn fractional() -> DissipationSpec {
        DissipationSpec::Fractional {
            alpha: 1.5,
            beta: 0.5,
        }
    }

    #[test]
    fn zero_state_has_zero_tendency() {
        let g = Grid::with_size(16).unwrap();
        let m = Model::new(&g, fractional()).unwrap();
        let t = m.rhs(&TcmState::zeros(&g)).unwrap();
        assert_eq!(t.u.max_abs_coeff() + t.v.max_abs_coeff() + t.theta.max_abs_coeff(), 0.0);
    }

    #[test]
    fn only_theta_coupling_survives() {
        let g = Grid::with_size(16).unwrap();
        let m = Model::new(&g, fractional()).unwrap();
        let mut s = TcmState::zeros(&g);
        s.theta = random_field(&g, 2);
        let t = m.rhs(&s).unwrap();
        assert_eq!(t.u.max_abs_coeff(), 0.0);
        assert_eq!(t.theta.max_abs_coeff(), 0.0);
        let grad = gradient(&s.theta).unwrap().scaled(-1.0);
        assert!(t.v.max_abs_diff(&grad) < 1e-15);
    }

    #[test]
    fn tensor_divergence_simple_cases() {
        let g = Grid::with_size(16).unwrap();
        let c = SpectralField::vector_from_fn(&g, |_, _| 0.3, |_, _| -1.2);
        assert!(tensor_divergence(&c).unwrap().max_abs_coeff() < 1e-15);
        let s = SpectralField::vector_from_fn(&g, |_, y| y.sin(), |_, _| 0.0);
        assert!(tensor_divergence(&s).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn advect_constant_is_zero_and_skew() {
        let g = Grid::with_size(32).unwrap();
        let s = random_state(&g, 4);
        let c = SpectralField::from_fn(&g, |_, _| 2.0);
        assert!(advect(&s.u, &c).unwrap().max_abs_coeff() < 1e-15);
        let a = advect(&s.u, &s.theta).unwrap();
        assert!(a.inner(&s.theta).abs() < 1e-11);
        let cu = SpectralField::vector_from_fn(&g, |_, _| 1.0, |_, _| 0.5);
        assert!(stretch(&s.v, &cu).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn nonlinear_terms_match_convolution_oracle() {
        let g = Grid::with_size(8).unwrap();
        let s = random_state(&g, 17);
        let c = |f: &SpectralField, i: usize| f.coeffs(i).to_vec();
        // (u.grad) theta
        let mut want = convolve(&g, &c(&s.u, 0), &derivative(&g, &c(&s.theta, 0), 0));
        for (w, z) in want
            .iter_mut()
            .zip(convolve(&g, &c(&s.u, 1), &derivative(&g, &c(&s.theta, 0), 1)))
        {
            *w += z;
        }
        let got = advect(&s.u, &s.theta).unwrap();
        assert!(max_abs_diff(got.coeffs(0), &want) < 1e-12);

        // div(v (x) v), second row: d1(v1 v2) + d2(v2 v2)
        let v12 = convolve(&g, &c(&s.v, 0), &c(&s.v, 1));
        let v22 = convolve(&g, &c(&s.v, 1), &c(&s.v, 1));
        let want: Vec<_> = derivative(&g, &v12, 0)
            .iter()
            .zip(derivative(&g, &v22, 1))
            .map(|(a, b)| a + b)
            .collect();
        let got = tensor_divergence(&s.v).unwrap();
        assert!(max_abs_diff(got.coeffs(1), &want) < 1e-12);
    }

    #[test]
    fn pairing_identity_holds() {
        let g = Grid::with_size(32).unwrap();
        let s = random_state(&g, 8);
        let a = tensor_divergence(&s.v).unwrap().inner(&s.u);
        let b = stretch(&s.v, &s.u).unwrap().inner(&s.v);
        assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn taylor_green_pressure() {
        let g = Grid::with_size(32).unwrap();
        let mut s = TcmState::zeros(&g);
        s.u = taylor_green(&g);
        let (p, div) = recover_pressure(&s).unwrap();
        assert!(div < 1e-14);
        let expected =
            SpectralField::from_fn(&g, |x, y| ((2.0 * x).cos() + (2.0 * y).cos()) / 4.0);
        assert!(p.max_abs_diff(&expected) < 1e-14);
        let (p0, _) = recover_pressure(&TcmState::zeros(&g)).unwrap();
        assert_eq!(p0.max_abs_coeff(), 0.0);
    }

    #[test]
    fn taylor_green_is_steady_without_dissipation() {
        let g = Grid::with_size(32).unwrap();
        let m = Model::new(&g, DissipationSpec::None).unwrap();
        let mut s = TcmState::zeros(&g);
        s.u = taylor_green(&g);
        let t = m.rhs(&s).unwrap();
        assert!(t.u.max_abs_coeff() < 1e-14);
    }

    #[test]
    fn nan_raises_blow_up() {
        let g = Grid::with_size(8).unwrap();
        let m = Model::new(&g, fractional()).unwrap();
        let mut s = TcmState::zeros(&g);
        s.theta.coeffs_mut(0)[3].re = f64::NAN;
        assert!(matches!(m.rhs(&s), Err(Error::BlowUp(_))));
    }

    #[test]
    fn regime_predicate() {
        let f = |alpha, beta| DissipationSpec::Fractional { alpha, beta }.in_fractional_regime();
        assert!(f(1.5, 0.5));
        assert!(f(1.2, 1.0));
        assert!(!f(1.0, 1.0));
        assert!(!f(2.0, 0.0));
        assert!(!f(1.5, 0.4));
    }

    #[test]
    fn negative_alpha_rejected() {
        let g = Grid::with_size(8).unwrap();
        let spec = DissipationSpec::Fractional {
            alpha: -1.0,
            beta: 0.0,
        };
        assert!(matches!(Model::new(&g, spec), Err(Error::Domain(_))));
    }
}
