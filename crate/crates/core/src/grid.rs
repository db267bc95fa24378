//! Periodic collocation grid on the torus `[0, L)^2` and its FFT plans.
//!
//! Arrays are row-major `n x n`: the flat index is `i2 * n + i1`, where `i1`
//! runs along `x1` and `i2` along `x2`. Spectral arrays use the same layout
//! with the standard FFT ordering of integer wavenumbers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    n: usize,
    length: f64,
    /// Integer lattice index per axis position, in `[-n/2, n/2)`.
    index: Vec<i64>,
    /// Physical wavenumber per axis position (`index * 2 pi / L`).
    wavenumber: Vec<f64>,
    /// Wavenumber used for odd derivatives; the Nyquist entry is zeroed so that
    /// derivatives of real fields stay real.
    deriv_wavenumber: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        let scale = 2.0 * PI / length;
        let half = (n / 2) as i64;
        let index: Vec<i64> = (0..n as i64)
            .map(|i| if i < half { i } else { i - n as i64 })
            .collect();
        let wavenumber: Vec<f64> = index.iter().map(|&m| m as f64 * scale).collect();
        let deriv_wavenumber = index
            .iter()
            .map(|&m| if m == -half { 0.0 } else { m as f64 * scale })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            length,
            index,
            wavenumber,
            deriv_wavenumber,
            forward,
            inverse,
        }))
    }

    /// Grid on the default `2 pi` torus.
    pub fn with_size(n: usize) -> Result<Arc<Grid>> {
        Grid::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Scale factor `2 pi / L` between lattice indices and wavenumbers.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest `|k|` on the grid, attained at the corner `(-n/2, -n/2)`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.n / 2) as f64 * self.wavenumber_scale()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.length == other.length
    }

    /// Integer lattice indices `(m1, m2)` of flat position `idx`.
    pub fn lattice(&self, idx: usize) -> (i64, i64) {
        (self.index[idx % self.n], self.index[idx / self.n])
    }

    /// Wavevector `(k1, k2)` of flat position `idx`.
    pub fn k(&self, idx: usize) -> (f64, f64) {
        (self.wavenumber[idx % self.n], self.wavenumber[idx / self.n])
    }

    /// Derivative wavevector of flat position `idx` (Nyquist components zeroed).
    pub fn k_deriv(&self, idx: usize) -> (f64, f64) {
        (
            self.deriv_wavenumber[idx % self.n],
            self.deriv_wavenumber[idx / self.n],
        )
    }

    /// `|k|^2` computed from the exact lattice sum, then scaled.
    pub fn k_squared(&self, idx: usize) -> f64 {
        let (m1, m2) = self.lattice(idx);
        let s = self.wavenumber_scale();
        (m1 * m1 + m2 * m2) as f64 * s * s
    }

    pub fn k_norm(&self, idx: usize) -> f64 {
        self.k_squared(idx).sqrt()
    }

    /// Flat index of the mode `-k`.
    pub fn negate(&self, idx: usize) -> usize {
        let n = self.n;
        let i1 = idx % n;
        let i2 = idx / n;
        ((n - i2) % n) * n + (n - i1) % n
    }

    /// Flat index of lattice mode `(m1, m2)`, wrapping periodically.
    pub fn index_of(&self, m1: i64, m2: i64) -> usize {
        let n = self.n as i64;
        (m2.rem_euclid(n) * n + m1.rem_euclid(n)) as usize
    }

    /// 2/3-rule mask: keeps modes with `|m_i| <= n/3` on both axes.
    pub fn in_dealias_mask(&self, idx: usize) -> bool {
        let (m1, m2) = self.lattice(idx);
        let n = self.n as i64;
        3 * m1.abs() <= n && 3 * m2.abs() <= n
    }

    /// Physical coordinates of collocation point `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    /// Physical -> spectral with `1/n^2` normalization, so that `cos(x1)`
    /// has coefficient 1/2 at `k = (+-1, 0)`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let norm = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= norm);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); data.len()];
        // rows, then columns through a transpose
        plan.process_with_scratch(data, &mut scratch);
        transpose::transpose(data, &mut buf, n, n);
        plan.process_with_scratch(&mut buf, &mut scratch);
        transpose::transpose(&buf, data, n, n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::with_size(2).is_err());
        assert!(Grid::with_size(12).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::with_size(8).is_ok());
    }

    #[test]
    fn wavenumbers_are_bounded() {
        let g = Grid::new(16, 3.0).unwrap();
        let bound = std::f64::consts::SQRT_2 * PI * 16.0 / 3.0;
        let max = (0..g.len()).map(|i| g.k_norm(i)).fold(0.0, f64::max);
        assert!(max <= bound * (1.0 + 1e-15));
        assert!((max - g.max_wavenumber()).abs() < 1e-12);
    }

    #[test]
    fn negate_is_involution() {
        let g = Grid::with_size(8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.negate(g.negate(idx)), idx);
            let (a, b) = g.lattice(idx);
            let (c, d) = g.lattice(g.negate(idx));
            // Nyquist maps to itself
            assert_eq!((a + c).rem_euclid(8), 0);
            assert_eq!((b + d).rem_euclid(8), 0);
        }
    }

    #[test]
    fn mask_keeps_two_thirds() {
        let g = Grid::with_size(8).unwrap();
        assert!(g.in_dealias_mask(g.index_of(2, -2)));
        assert!(!g.in_dealias_mask(g.index_of(3, 0)));
        assert!(!g.in_dealias_mask(g.index_of(0, -4)));
    }
}
