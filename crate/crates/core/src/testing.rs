//! Random fields and a brute-force convolution oracle, shared by the unit
//! tests, the integration suites and the `check-properties` command.
//!
//! The oracle sums over every pair of retained modes directly and never
//! touches the FFT path it is used to check.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::TcmState;
use crate::ops::leray_project;

/// Uniform random physical values in `[-1, 1)`; full spectrum.
pub fn random_field(grid: &Arc<Grid>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field_from(grid, &mut rng)
}

pub fn random_vector(grid: &Arc<Grid>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field_from(grid, &mut rng).stack(random_field_from(grid, &mut rng))
}

pub fn random_field_from(grid: &Arc<Grid>, rng: &mut impl Rng) -> SpectralField {
    let data: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SpectralField::from_physical(grid, &[data]).expect("grid-shaped data")
}

/// Random state with projected `u`, random `v` and `theta`.
pub fn random_state(grid: &Arc<Grid>, seed: u64) -> TcmState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_field_from(grid, &mut rng).stack(random_field_from(grid, &mut rng));
    let v = random_field_from(grid, &mut rng).stack(random_field_from(grid, &mut rng));
    let theta = random_field_from(grid, &mut rng);
    TcmState {
        u: leray_project(&u).expect("vector field"),
        v,
        theta,
        time: 0.0,
    }
}

/// Spectrum of `f` restricted to the 2/3 mask, as `(m1, m2, coeff)` triples.
fn retained_modes(f: &[Complex64], grid: &Grid) -> Vec<(i64, i64, Complex64)> {
    (0..grid.len())
        .filter(|&idx| grid.in_dealias_mask(idx))
        .map(|idx| {
            let (m1, m2) = grid.lattice(idx);
            (m1, m2, f[idx])
        })
        .filter(|t| t.2 != Complex64::default())
        .collect()
}

/// Direct `O(n^4)` convolution of the truncated spectra of `a` and `b`,
/// keeping only output modes inside the mask.
pub fn convolve(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n() as i64;
    let mut out = vec![Complex64::default(); grid.len()];
    let ma = retained_modes(a, grid);
    let mb = retained_modes(b, grid);
    for &(p1, p2, x) in &ma {
        for &(q1, q2, y) in &mb {
            let (s1, s2) = (p1 + q1, p2 + q2);
            if 3 * s1.abs() <= n && 3 * s2.abs() <= n {
                out[grid.index_of(s1, s2)] += x * y;
            }
        }
    }
    out
}

/// `i k_axis f` using integer-lattice wavenumbers scaled to the grid.
pub fn derivative(grid: &Grid, f: &[Complex64], axis: usize) -> Vec<Complex64> {
    let s = grid.wavenumber_scale();
    let n = grid.n() as i64;
    (0..grid.len())
        .map(|idx| {
            let (m1, m2) = grid.lattice(idx);
            let m = if axis == 0 { m1 } else { m2 };
            if m == -n / 2 {
                Complex64::default()
            } else {
                Complex64::new(0.0, m as f64 * s) * f[idx]
            }
        })
        .collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
