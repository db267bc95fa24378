//! Spectral representation of real scalar and vector fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Fourier coefficients of a real field with one (scalar) or two (vector)
/// components.
///
/// Norms and inner products use the domain-averaged convention
/// `<f, g> = Re sum_k f(k) conj(g(k)) = |T|^{-1} \int f g dx`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, components: usize) -> Self {
        assert!(components == 1 || components == 2, "1 or 2 components");
        SpectralField {
            grid: grid.clone(),
            comps: vec![vec![Complex64::default(); grid.len()]; components],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() || comps.len() > 2 {
            return Err(Error::Shape {
                expected: 2,
                found: comps.len(),
            });
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Config(format!(
                "coefficient array has length {}, grid needs {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            comps,
        })
    }

    /// Forward transform of real physical arrays, one per component.
    pub fn from_physical(grid: &Arc<Grid>, data: &[Vec<f64>]) -> Result<Self> {
        if data.is_empty() || data.len() > 2 {
            return Err(Error::Shape {
                expected: 2,
                found: data.len(),
            });
        }
        let comps = if let [a, b] = data {
            let (ca, cb) = to_spectral_pair(grid, a, b)?;
            vec![ca, cb]
        } else {
            vec![to_spectral(grid, &data[0])?]
        };
        Ok(SpectralField {
            grid: grid.clone(),
            comps,
        })
    }

    /// Samples `f(x1, x2)` on the collocation grid.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let data: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.point(i);
                f(x1, x2)
            })
            .collect();
        Self::from_physical(grid, &[data]).expect("shape is grid-consistent")
    }

    pub fn vector_from_fn(
        grid: &Arc<Grid>,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        Self::from_fn(grid, f1).stack(Self::from_fn(grid, f2))
    }

    /// Joins two scalar fields into a vector field.
    pub fn stack(self, other: SpectralField) -> SpectralField {
        assert!(self.is_scalar() && other.is_scalar());
        let mut comps = self.comps;
        comps.extend(other.comps);
        SpectralField {
            grid: self.grid,
            comps,
        }
    }

    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        match self.comps.as_slice() {
            [a, b] => {
                let (pa, pb) = to_physical_pair(&self.grid, a, b);
                vec![pa, pb]
            }
            comps => comps.iter().map(|c| to_physical(&self.grid, c)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.comps.len() == 1
    }

    pub fn coeffs(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn coeffs_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            comps: vec![self.comps[c].clone()],
        }
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub fn expect_components(&self, n: usize) -> Result<()> {
        if self.comps.len() != n {
            return Err(Error::Shape {
                expected: n,
                found: self.comps.len(),
            });
        }
        Ok(())
    }

    pub fn expect_same_grid(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Config(format!(
                "grid mismatch: n={} L={} vs n={} L={}",
                self.grid.n(),
                self.grid.length(),
                other.grid.n(),
                other.grid.length()
            )));
        }
        Ok(())
    }

    /// Multiplies every component by a real symbol tabulated over the grid.
    pub fn apply_symbol(&self, symbol: &[f64]) -> SpectralField {
        let mut out = self.clone();
        out.apply_symbol_in_place(symbol);
        out
    }

    pub fn apply_symbol_in_place(&mut self, symbol: &[f64]) {
        for c in &mut self.comps {
            for (z, &m) in c.iter_mut().zip(symbol) {
                *z *= m;
            }
        }
    }

    /// Multiplies every component by `symbol(idx)`.
    pub fn map_modes(&self, symbol: impl Fn(usize) -> f64) -> SpectralField {
        let mut out = self.clone();
        for c in &mut out.comps {
            for (idx, z) in c.iter_mut().enumerate() {
                *z *= symbol(idx);
            }
        }
        out
    }

    /// Zeroes the modes outside the 2/3-rule mask.
    pub fn truncate(&mut self) {
        for c in &mut self.comps {
            for (idx, z) in c.iter_mut().enumerate() {
                if !self.grid.in_dealias_mask(idx) {
                    *z = Complex64::default();
                }
            }
        }
    }

    pub fn truncated(&self) -> SpectralField {
        let mut out = self.clone();
        out.truncate();
        out
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            c.iter_mut().for_each(|z| *z *= a);
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.comps.len(), other.comps.len());
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (z, w) in c.iter_mut().zip(o) {
                *z += a * w;
            }
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Real inner product summed over components.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.re * y.re + x.im * y.im)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `sum_k w(k) |f(k)|^2` over all components.
    pub fn weighted_norm_sq(&self, weight: impl Fn(usize) -> f64) -> f64 {
        self.comps
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(idx, z)| weight(idx) * z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Spatial mean of each component (the `k = 0` coefficient).
    pub fn mean(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c[0].re).collect()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Grid maximum of the pointwise Euclidean norm over components.
    pub fn max_pointwise(&self) -> f64 {
        max_pointwise(&self.to_physical())
    }

    /// Largest `|f(-k) - conj f(k)|` over modes and components.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        self.comps
            .iter()
            .flat_map(|c| (0..g.len()).map(move |idx| (c[g.negate(idx)] - c[idx].conj()).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest coefficient difference against another field.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }
}

pub fn max_pointwise(phys: &[Vec<f64>]) -> f64 {
    let n = phys[0].len();
    (0..n)
        .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Forward transform of a single real array.
pub fn to_spectral(grid: &Grid, physical: &[f64]) -> Result<Vec<Complex64>> {
    if physical.len() != grid.len() {
        return Err(Error::Config(format!(
            "physical array has {} points, grid n={} needs {}",
            physical.len(),
            grid.n(),
            grid.len()
        )));
    }
    let mut buf: Vec<Complex64> = physical.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.forward(&mut buf);
    Ok(buf)
}

/// Two real arrays through one complex transform, packed as `a + ib` and
/// split with the conjugate symmetry of real spectra.
pub fn to_spectral_pair(grid: &Grid, a: &[f64], b: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::Config(format!(
            "physical arrays have {}/{} points, grid n={} needs {}",
            a.len(),
            b.len(),
            grid.n(),
            grid.len()
        )));
    }
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    grid.forward(&mut z);
    let mut ca = Vec::with_capacity(z.len());
    let mut cb = Vec::with_capacity(z.len());
    for idx in 0..z.len() {
        let zk = z[idx];
        let zm = z[grid.negate(idx)].conj();
        ca.push((zk + zm) * 0.5);
        let d = (zk - zm) * 0.5;
        // d / i
        cb.push(Complex64::new(d.im, -d.re));
    }
    Ok((ca, cb))
}

/// Inverse of two real spectra with one complex transform.
pub fn to_physical_pair(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
        .collect();
    grid.inverse(&mut z);
    z.into_iter().map(|w| (w.re, w.im)).unzip()
}

/// Inverse transform; imaginary round-off is dropped.
pub fn to_physical(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    grid.inverse(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_physical(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn constant_has_only_mean() {
        let g = Grid::with_size(8).unwrap();
        let f = SpectralField::from_fn(&g, |_, _| 1.0);
        assert!((f.coeffs(0)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs(0)[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn cosine_has_half_amplitude_pair() {
        let g = Grid::with_size(8).unwrap();
        let f = SpectralField::from_fn(&g, |x, _| x.cos());
        for idx in 0..g.len() {
            let expected = match g.lattice(idx) {
                (1, 0) | (-1, 0) => 0.5,
                _ => 0.0,
            };
            assert!((f.coeffs(0)[idx] - Complex64::new(expected, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = Grid::with_size(32).unwrap();
        let x = random_physical(32, 7);
        let f = SpectralField::from_physical(&g, &[x.clone()]).unwrap();
        let back = &f.to_physical()[0];
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = x.iter().zip(back).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-13, "round trip error {err}");

        let phys = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((phys - f.norm_sq()).abs() / phys < 1e-12);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let g = Grid::with_size(8).unwrap();
        let err = SpectralField::from_physical(&g, &[vec![0.0; 10]]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
