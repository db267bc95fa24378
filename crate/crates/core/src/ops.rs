//! Fourier multipliers, spectral differentiation, Leray projection and
//! 2/3-rule products.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::gfunc::GFunction;
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Symbol `|k|^{2 gamma}` of `(-Laplacian)^gamma`, zero at `k = 0`.
pub fn fractional_symbol(gamma: f64, k: (f64, f64)) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "fractional exponent must be >= 0, got {gamma}"
        )));
    }
    Ok(fractional_symbol_k2(gamma, k.0 * k.0 + k.1 * k.1))
}

pub(crate) fn fractional_symbol_k2(gamma: f64, k2: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else {
        k2.powf(gamma)
    }
}

/// Symbol `|k|^2 / g(|k|)` of `L`, or its square when `squared` is set.
pub fn log_dissipation_symbol(g: &GFunction, k: (f64, f64), squared: bool) -> Result<f64> {
    log_symbol_k2(g, k.0 * k.0 + k.1 * k.1, squared)
}

pub(crate) fn log_symbol_k2(g: &GFunction, k2: f64, squared: bool) -> Result<f64> {
    if k2 == 0.0 {
        return Ok(0.0);
    }
    let gk = g.eval(k2.sqrt());
    if !(gk >= 1.0) {
        return Err(Error::Invariant(format!(
            "g(|k|) = {gk} < 1 at |k| = {}",
            k2.sqrt()
        )));
    }
    let m = k2 / gk;
    Ok(if squared { m * m } else { m })
}

/// A real radial symbol tabulated over the grid.
#[derive(Clone, Debug)]
pub struct FourierMultiplier {
    pub name: String,
    pub symbol: Vec<f64>,
}

impl FourierMultiplier {
    pub fn tabulate(
        name: impl Into<String>,
        grid: &Grid,
        symbol: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        let symbol = (0..grid.len())
            .map(|idx| symbol(grid.k_squared(idx)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FourierMultiplier {
            name: name.into(),
            symbol,
        })
    }

    /// `(-Laplacian)^gamma`; `Lambda^s` is `fractional(s / 2)`.
    pub fn fractional(grid: &Grid, gamma: f64) -> Result<Self> {
        fractional_symbol(gamma, (0.0, 0.0))?;
        Self::tabulate(format!("(-lap)^{gamma}"), grid, |k2| {
            Ok(fractional_symbol_k2(gamma, k2))
        })
    }

    pub fn log_supercritical(grid: &Grid, g: &GFunction, squared: bool) -> Result<Self> {
        let name = if squared { format!("L^2[{g}]") } else { format!("L[{g}]") };
        Self::tabulate(name, grid, |k2| log_symbol_k2(g, k2, squared))
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        f.apply_symbol(&self.symbol)
    }
}

/// `(grad f)_i = i k_i f`, scalar in, vector out.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    f.expect_components(1)?;
    let g = f.grid();
    let c = f.coeffs(0);
    let mut d1 = vec![Complex64::default(); g.len()];
    let mut d2 = vec![Complex64::default(); g.len()];
    for idx in 0..g.len() {
        let (k1, k2) = g.k_deriv(idx);
        d1[idx] = I * k1 * c[idx];
        d2[idx] = I * k2 * c[idx];
    }
    SpectralField::from_coeffs(g, vec![d1, d2])
}

/// Partial derivative along axis `axis` (0 or 1) of every component.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let g = f.grid().clone();
    let comps = (0..f.components())
        .map(|c| {
            f.coeffs(c)
                .iter()
                .enumerate()
                .map(|(idx, z)| {
                    let k = g.k_deriv(idx);
                    I * if axis == 0 { k.0 } else { k.1 } * z
                })
                .collect()
        })
        .collect();
    SpectralField::from_coeffs(&g, comps).expect("shape preserved")
}

pub fn divergence(w: &SpectralField) -> Result<SpectralField> {
    w.expect_components(2)?;
    let g = w.grid();
    let (a, b) = (w.coeffs(0), w.coeffs(1));
    let out = (0..g.len())
        .map(|idx| {
            let (k1, k2) = g.k_deriv(idx);
            I * (k1 * a[idx] + k2 * b[idx])
        })
        .collect();
    SpectralField::from_coeffs(g, vec![out])
}

/// Leray projector `I + (-Laplacian)^{-1} grad div` onto divergence-free
/// fields; `k = 0` passes through.
///
/// Built from the derivative wavevector so that the output has exactly zero
/// discrete divergence and the operator is an orthogonal projection.
pub fn leray_project(w: &SpectralField) -> Result<SpectralField> {
    w.expect_components(2)?;
    let g = w.grid();
    let mut out = w.clone();
    for idx in 0..g.len() {
        let (k1, k2) = g.k_deriv(idx);
        let kk = k1 * k1 + k2 * k2;
        if kk == 0.0 {
            continue;
        }
        let a = w.coeffs(0)[idx];
        let b = w.coeffs(1)[idx];
        let dot = (k1 * a + k2 * b) / kk;
        out.coeffs_mut(0)[idx] = a - k1 * dot;
        out.coeffs_mut(1)[idx] = b - k2 * dot;
    }
    Ok(out)
}

/// `(-Laplacian)^{-1}`: divides by `|k|^2`, zero mode set to 0.
pub fn invert_neg_laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    f.map_modes(|idx| {
        let k2 = g.k_squared(idx);
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / k2
        }
    })
}

/// Physical values of the 2/3-truncated field.
pub(crate) fn truncated_physical(f: &SpectralField) -> Vec<Vec<f64>> {
    f.truncated().to_physical()
}

/// Forward transform of physical products followed by the 2/3 mask.
pub(crate) fn masked_spectral(grid: &Arc<Grid>, data: &[Vec<f64>]) -> SpectralField {
    let mut f = SpectralField::from_physical(grid, data).expect("grid-shaped data");
    f.truncate();
    f
}

/// Pseudo-spectral product `f g` of two scalar fields: inputs truncated to
/// the 2/3 mask, multiplied on the grid, output masked. Equals the exact
/// convolution of the truncated spectra restricted to the mask.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.expect_same_grid(g)?;
    f.expect_components(1)?;
    g.expect_components(1)?;
    let a = &truncated_physical(f)[0];
    let b = &truncated_physical(g)[0];
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    Ok(masked_spectral(f.grid(), &[prod]))
}
