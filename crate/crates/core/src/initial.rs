//! Initial data: Taylor-Green vortex, seeded random smooth fields, or a
//! snapshot file.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::lp::hermitian_part;
use crate::model::TcmState;
use crate::snapshot::Snapshot;

/// Seeded random spectrum: coefficient amplitudes scale like
/// `|k|^(slope - 1)` for `1 <= |k| <= cutoff`, so the dyadic shell norms
/// grow like `2^(j * slope)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpectrum {
    pub seed: u64,
    pub spectrum_slope: f64,
    pub cutoff: f64,
    /// Root-mean-square value of each of `u`, `v` and `theta`.
    pub amplitude: f64,
}

impl Default for RandomSpectrum {
    fn default() -> Self {
        RandomSpectrum {
            seed: 0,
            spectrum_slope: -2.0,
            cutoff: 8.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `u = (sin x cos y, -cos x sin y)`, with `v` and `theta` zero or
    /// drawn from the optional spectrum.
    TaylorGreen { perturbation: Option<RandomSpectrum> },
    RandomSmooth(RandomSpectrum),
    FromFile { path: PathBuf },
}

impl InitialData {
    pub fn build(&self, grid: &Arc<Grid>) -> Result<TcmState> {
        let mut state = match self {
            InitialData::TaylorGreen { perturbation } => {
                let mut s = TcmState::zeros(grid);
                s.u = taylor_green(grid);
                if let Some(spec) = perturbation {
                    let mut rng = spec.rng()?;
                    // skip the u draw so v, theta match the random-smooth stream
                    let _ = spec.draw(grid, 2, &mut rng)?;
                    s.v = spec.draw(grid, 2, &mut rng)?;
                    s.theta = spec.draw(grid, 1, &mut rng)?;
                }
                s
            }
            InitialData::RandomSmooth(spec) => {
                let mut rng = spec.rng()?;
                let mut s = TcmState::zeros(grid);
                s.u = spec.draw(grid, 2, &mut rng)?;
                s.v = spec.draw(grid, 2, &mut rng)?;
                s.theta = spec.draw(grid, 1, &mut rng)?;
                s.project_u()?;
                let norm = s.u.l2_norm();
                if norm > 0.0 {
                    s.u.scale(spec.amplitude / norm);
                }
                s
            }
            InitialData::FromFile { path } => Snapshot::load(path)?.state_on(grid)?,
        };
        state.project_u()?;
        state.validate()?;
        Ok(state)
    }
}

pub fn taylor_green(grid: &Arc<Grid>) -> SpectralField {
    SpectralField::vector_from_fn(grid, |x, y| x.sin() * y.cos(), |x, y| -x.cos() * y.sin())
}

impl RandomSpectrum {
    fn rng(&self) -> Result<ChaCha8Rng> {
        if !(self.cutoff >= 1.0) {
            return Err(Error::Config(format!("cutoff {} must be >= 1", self.cutoff)));
        }
        if !(self.amplitude >= 0.0) || !self.spectrum_slope.is_finite() {
            return Err(Error::Config("amplitude must be >= 0 and slope finite".into()));
        }
        Ok(ChaCha8Rng::seed_from_u64(self.seed))
    }

    /// Draws every mode (so the stream does not depend on the cutoff), keeps
    /// the shell `1 <= |k| <= cutoff` and normalizes to `amplitude`.
    fn draw(&self, grid: &Arc<Grid>, ncomp: usize, rng: &mut impl Rng) -> Result<SpectralField> {
        if self.cutoff > grid.max_wavenumber() {
            return Err(Error::Config(format!(
                "cutoff {} exceeds the largest resolved wavenumber {:.3}",
                self.cutoff,
                grid.max_wavenumber()
            )));
        }
        let mut f = SpectralField::zeros(grid, ncomp);
        for c in 0..ncomp {
            for (idx, z) in f.coeffs_mut(c).iter_mut().enumerate() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let r = grid.k_norm(idx);
                if r >= 1.0 && r <= self.cutoff {
                    *z = Complex64::new(re, im) * r.powf(self.spectrum_slope - 1.0);
                }
            }
        }
        hermitian_part(&mut f);
        let norm = f.l2_norm();
        if norm > 0.0 {
            f.scale(self.amplitude / norm);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{least_squares, DyadicFilterBank, LebesgueExponent};

    #[test]
    fn taylor_green_is_divergence_free_unit_mode() {
        let g = Grid::with_size(32).unwrap();
        let s = InitialData::TaylorGreen { perturbation: None }.build(&g).unwrap();
        assert!((s.u.norm_sq() - 0.5).abs() < 1e-14);
        assert_eq!(s.v.norm_sq(), 0.0);
    }

    #[test]
    fn random_data_is_seeded_and_real() {
        let g = Grid::with_size(32).unwrap();
        let spec = RandomSpectrum {
            seed: 7,
            ..RandomSpectrum::default()
        };
        let a = InitialData::RandomSmooth(spec.clone()).build(&g).unwrap();
        let b = InitialData::RandomSmooth(spec.clone()).build(&g).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
        let c = InitialData::RandomSmooth(RandomSpectrum { seed: 8, ..spec }).build(&g).unwrap();
        assert!(a.max_abs_diff(&c) > 1e-3);
        for f in [&a.u, &a.v, &a.theta] {
            assert!(f.hermitian_defect() < 1e-15);
            assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_norms_follow_requested_slope() {
        let g = Grid::with_size(128).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        for slope in [-1.0, -2.0, 0.5] {
            let spec = RandomSpectrum {
                seed: 3,
                spectrum_slope: slope,
                cutoff: 60.0,
                amplitude: 1.0,
            };
            let s = InitialData::RandomSmooth(spec).build(&g).unwrap();
            let (mut js, mut logs) = (vec![], vec![]);
            for j in 1..=4 {
                let b = bank.block_norm(&s.theta, j, LebesgueExponent::Two).unwrap();
                js.push(j as f64);
                logs.push(b.log2());
            }
            let (fit, _) = least_squares(&js, &logs).unwrap();
            assert!((fit - slope).abs() < 0.3, "slope {slope}: fitted {fit}");
        }
    }

    #[test]
    fn bad_cutoff_is_a_config_error() {
        let g = Grid::with_size(8).unwrap();
        let spec = RandomSpectrum {
            cutoff: 100.0,
            ..RandomSpectrum::default()
        };
        assert!(matches!(InitialData::RandomSmooth(spec).build(&g), Err(Error::Config(_))));
    }
}
