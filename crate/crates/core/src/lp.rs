//! Littlewood-Paley decomposition on the periodic grid.
//!
//! `chi` is a smooth radial non-increasing cutoff equal to 1 on
//! `|xi| <= 3/4` and 0 on `|xi| >= 4/3`; `phi(xi) = chi(xi/2) - chi(xi)` is
//! supported in the annulus `3/4 <= |xi| <= 8/3`. The blocks are
//! `Delta_{-1} = chi(D)` and `Delta_j = phi(2^{-j} D)` for `j >= 0`, with
//! low-frequency cutoffs `S_j = chi(2^{-j} D)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

pub const INNER_RADIUS: f64 = 3.0 / 4.0;
pub const OUTER_RADIUS: f64 = 4.0 / 3.0;
/// Annulus bounds of `phi`.
pub const SHELL_LOW: f64 = 3.0 / 4.0;
pub const SHELL_HIGH: f64 = 8.0 / 3.0;

/// Shape of `chi` on the transition band `3/4 < |xi| < 4/3`, as a function of
/// `t = (|xi| - 3/4) / (4/3 - 3/4)` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum TransitionProfile {
    /// `1 - h(t) / (h(t) + h(1 - t))` with `h(t) = exp(-1/t)`; C-infinity.
    Mollifier,
    /// Values at equally spaced `t` from 0 to 1, linearly interpolated.
    /// Must start at 1, end at 0 and be non-increasing.
    Table(Vec<f64>),
}

impl TransitionProfile {
    fn eval(&self, t: f64) -> f64 {
        match self {
            TransitionProfile::Mollifier => {
                let h = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
                let (a, b) = (h(t), h(1.0 - t));
                1.0 - a / (a + b)
            }
            TransitionProfile::Table(v) => {
                let x = t * (v.len() - 1) as f64;
                let i = (x.floor() as usize).min(v.len() - 2);
                let w = x - i as f64;
                v[i] * (1.0 - w) + v[i + 1] * w
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let TransitionProfile::Table(v) = self {
            if v.len() < 2 {
                return Err(Error::Invariant("profile table needs >= 2 values".into()));
            }
            if v[0] != 1.0 || v[v.len() - 1] != 0.0 {
                return Err(Error::Invariant(
                    "profile table must run from 1 down to 0".into(),
                ));
            }
            if v.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::Invariant("transition profile is not monotone".into()));
            }
        }
        // sampled check also covers the analytic profile
        let mut prev = 1.0;
        for i in 0..=1000 {
            let c = self.eval(i as f64 / 1000.0);
            if !(0.0..=1.0).contains(&c) || c > prev {
                return Err(Error::Invariant("transition profile is not monotone".into()));
            }
            prev = c;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LebesgueExponent {
    Two,
    Infinity,
}

impl LebesgueExponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 2.0 {
            Ok(LebesgueExponent::Two)
        } else if p == f64::INFINITY {
            Ok(LebesgueExponent::Infinity)
        } else {
            Err(Error::Unsupported(format!(
                "Lebesgue exponent p = {p}; only p = 2 and p = inf are computed exactly"
            )))
        }
    }
}

/// Parameters `(s, p, r)` of a `B^s_{p,r}` norm.
#[derive(Clone, Copy, Debug)]
pub struct BesovNormRequest {
    pub s: f64,
    pub p: LebesgueExponent,
    /// Summation exponent in `[1, inf]`.
    pub r: f64,
}

impl BesovNormRequest {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        let p = LebesgueExponent::from_f64(p)?;
        if !(r >= 1.0) {
            return Err(Error::Domain(format!("summation exponent r = {r} must be >= 1")));
        }
        Ok(BesovNormRequest { s, p, r })
    }
}

/// Least-squares fit of `ln ||e^{-t Lambda^gamma} Delta_j h||_2` against `t`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub j: i32,
    pub gamma: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `[-(8/3 2^j)^gamma, -(3/4 2^j)^gamma]`
    pub bracket: (f64, f64),
    /// `-slope / 2^{j gamma}`, an empirical value of the rate constant.
    pub rate_constant: f64,
}

impl DecayFit {
    pub fn within_bracket(&self) -> bool {
        self.bracket.0 <= self.slope && self.slope <= self.bracket.1
    }
}

#[derive(Clone, Debug)]
pub struct DyadicFilterBank {
    grid: Arc<Grid>,
    profile: TransitionProfile,
    j_max: i32,
    /// `blocks[j + 1]` is the symbol of `Delta_j`, `j = -1 ..= j_max`.
    blocks: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterBankReport {
    pub n: usize,
    pub domain_length: f64,
    pub j_max: i32,
    pub profile: String,
    /// `(|xi|, chi(|xi|))` samples on `[0, 2]`.
    pub chi_samples: Vec<(f64, f64)>,
    pub partition_defect: f64,
    pub chi_monotone: bool,
    /// Number of grid modes carried by each block.
    pub block_support: Vec<(i32, usize)>,
}

impl DyadicFilterBank {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        Self::with_profile(grid, TransitionProfile::Mollifier)
    }

    pub fn with_profile(grid: &Arc<Grid>, profile: TransitionProfile) -> Result<Self> {
        profile.validate()?;
        let j_max = ((grid.max_wavenumber().log2().ceil() as i32) + 1).max(0);
        let mut bank = DyadicFilterBank {
            grid: grid.clone(),
            profile,
            j_max,
            blocks: Vec::new(),
        };
        bank.blocks = (-1..=j_max)
            .map(|j| {
                (0..grid.len())
                    .map(|idx| bank.block_value(j, grid.k_norm(idx)))
                    .collect()
            })
            .collect();
        Ok(bank)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn chi(&self, r: f64) -> f64 {
        if r <= INNER_RADIUS {
            1.0
        } else if r >= OUTER_RADIUS {
            0.0
        } else {
            self.profile
                .eval((r - INNER_RADIUS) / (OUTER_RADIUS - INNER_RADIUS))
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.chi(r / 2.0) - self.chi(r)
    }

    fn block_value(&self, j: i32, r: f64) -> f64 {
        if j < 0 {
            self.chi(r)
        } else {
            self.phi(r / 2f64.powi(j))
        }
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            return Err(Error::Domain(format!(
                "block index {j} outside [-1, {}]",
                self.j_max
            )));
        }
        Ok(())
    }

    pub fn block_symbol(&self, j: i32) -> Result<&[f64]> {
        self.check_block(j)?;
        Ok(&self.blocks[(j + 1) as usize])
    }

    /// `Delta_j f`
    pub fn dyadic_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        Ok(f.apply_symbol(self.block_symbol(j)?))
    }

    /// `S_j f = chi(2^{-j} D) f = sum_{k <= j-1} Delta_k f`, for `0 <= j <= j_max + 1`.
    pub fn low_cutoff(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        if j < 0 || j > self.j_max + 1 {
            return Err(Error::Domain(format!(
                "cutoff index {j} outside [0, {}]",
                self.j_max + 1
            )));
        }
        let scale = 2f64.powi(j);
        let g = self.grid.clone();
        Ok(f.map_modes(|idx| self.chi(g.k_norm(idx) / scale)))
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if !f.grid().same_as(&self.grid) {
            return Err(Error::Config("field grid differs from filter bank grid".into()));
        }
        Ok(())
    }

    /// Block indices `-1 ..= j_max`.
    pub fn indices(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    /// Largest `|chi(k) + sum_j phi(2^{-j} k) - 1|` over grid wavenumbers.
    pub fn partition_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| {
                let sum: f64 = self.blocks.iter().map(|b| b[idx]).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `||Delta_j f||_{L^p}`: Parseval for `p = 2`, grid maximum of the
    /// pointwise Euclidean norm for `p = inf`.
    pub fn block_norm(&self, f: &SpectralField, j: i32, p: LebesgueExponent) -> Result<f64> {
        let b = self.dyadic_block(f, j)?;
        Ok(match p {
            LebesgueExponent::Two => b.l2_norm(),
            LebesgueExponent::Infinity => b.max_pointwise(),
        })
    }

    /// `(sum_j (2^{js} ||Delta_j f||_p)^r)^{1/r}`, supremum for `r = inf`.
    pub fn besov_norm(&self, f: &SpectralField, req: &BesovNormRequest) -> Result<f64> {
        let terms = self
            .indices()
            .map(|j| Ok(2f64.powf(j as f64 * req.s) * self.block_norm(f, j, req.p)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(if req.r.is_infinite() {
            terms.into_iter().fold(0.0, f64::max)
        } else {
            terms.iter().map(|t| t.powf(req.r)).sum::<f64>().powf(1.0 / req.r)
        })
    }

    /// `sum_{j >= -1} 2^{max(j, 0)} ||Delta_j u||_inf`, an upper bound for
    /// `||grad u||_inf` up to a constant.
    pub fn besov_majorant_grad_linf(&self, u: &SpectralField) -> Result<f64> {
        let mut total = 0.0;
        for j in self.indices() {
            let b = self.dyadic_block(u, j)?;
            if b.max_abs_coeff() == 0.0 {
                continue;
            }
            total += 2f64.powi(j.max(0)) * b.max_pointwise();
        }
        Ok(total)
    }

    pub fn report(&self) -> FilterBankReport {
        let chi_samples = (0..=64)
            .map(|i| {
                let r = 2.0 * i as f64 / 64.0;
                (r, self.chi(r))
            })
            .collect::<Vec<_>>();
        let chi_monotone = chi_samples.windows(2).all(|w| w[1].1 <= w[0].1);
        FilterBankReport {
            n: self.grid.n(),
            domain_length: self.grid.length(),
            j_max: self.j_max,
            profile: match &self.profile {
                TransitionProfile::Mollifier => "mollifier exp(-1/t)".into(),
                TransitionProfile::Table(v) => format!("table[{}]", v.len()),
            },
            chi_samples,
            partition_defect: self.partition_defect(),
            chi_monotone,
            block_support: self
                .indices()
                .map(|j| (j, self.blocks[(j + 1) as usize].iter().filter(|&&v| v != 0.0).count()))
                .collect(),
        }
    }
}

/// Annulus `[3/4 2^j, 8/3 2^j]` in which `Delta_j` is supported.
pub fn shell_bounds(j: i32) -> (f64, f64) {
    let s = 2f64.powi(j);
    (SHELL_LOW * s, SHELL_HIGH * s)
}

/// `||Lambda^kappa f||_2 / (2^{j kappa} ||f||_2)` for `f` supported in the
/// `j`-th annulus; lies in `[(3/4)^kappa, (8/3)^kappa]`.
pub fn bernstein_ratio(f: &SpectralField, j: i32, kappa: f64) -> Result<f64> {
    if j < 0 {
        return Err(Error::Domain(format!("shell index must be >= 0, got {j}")));
    }
    let g = f.grid().clone();
    let (lo, hi) = shell_bounds(j);
    let scale = f.max_abs_coeff();
    if scale == 0.0 {
        return Err(Error::Precondition("field is zero".into()));
    }
    for c in 0..f.components() {
        for (idx, z) in f.coeffs(c).iter().enumerate() {
            let r = g.k_norm(idx);
            if z.norm() > 1e-14 * scale && (r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12)) {
                return Err(Error::Precondition(format!(
                    "mode |k| = {r} lies outside shell {j} = [{lo}, {hi}]"
                )));
            }
        }
    }
    let num = f.weighted_norm_sq(|idx| {
        let k2 = g.k_squared(idx);
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(kappa)
        }
    });
    Ok(num.sqrt() / (2f64.powf(j as f64 * kappa) * f.l2_norm()))
}

/// Fits the decay rate of `||e^{-t Lambda^gamma} Delta_j h||_2` over the
/// sample times.
pub fn semigroup_block_decay(
    bank: &DyadicFilterBank,
    h: &SpectralField,
    j: i32,
    gamma: f64,
    t_samples: &[f64],
) -> Result<DecayFit> {
    if j < 0 {
        return Err(Error::Domain(format!("shell index must be >= 0, got {j}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    let block = bank.dyadic_block(h, j)?;
    if block.norm_sq() == 0.0 {
        return Err(Error::Fit(format!("block {j} of the data is zero")));
    }
    if t_samples.len() < 2 {
        return Err(Error::Fit("need at least two sample times".into()));
    }
    let (lo, hi) = shell_bounds(j);
    let t_min = t_samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = t_samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (t_max - t_min) * lo.powf(gamma) < 1.0 {
        return Err(Error::Precondition(
            "sample times span less than one e-folding of the slowest shell rate".into(),
        ));
    }
    let g = bank.grid().clone();
    let rates: Vec<f64> = (0..g.len()).map(|idx| g.k_norm(idx).powf(gamma)).collect();
    let logs: Vec<f64> = t_samples
        .iter()
        .map(|&t| {
            0.5 * block
                .weighted_norm_sq(|idx| (-2.0 * t * rates[idx]).exp())
                .ln()
        })
        .collect();
    let (slope, intercept) = least_squares(t_samples, &logs)?;
    Ok(DecayFit {
        j,
        gamma,
        slope,
        intercept,
        bracket: (-hi.powf(gamma), -lo.powf(gamma)),
        rate_constant: -slope / 2f64.powf(j as f64 * gamma),
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::Fit("degenerate regression data".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Random real field supported in the `j`-th annulus, amplitudes `~ |k|^{-1}`
/// (scale-invariant shell energy in two dimensions).
pub fn random_shell_field(grid: &Arc<Grid>, j: i32, rng: &mut impl Rng) -> SpectralField {
    let (lo, hi) = shell_bounds(j);
    let mut f = SpectralField::zeros(grid, 1);
    let coeffs = f.coeffs_mut(0);
    for (idx, z) in coeffs.iter_mut().enumerate() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let r = grid.k_norm(idx);
        if r >= lo && r <= hi {
            *z = num_complex::Complex64::new(re, im) / r;
        }
    }
    hermitian_part(&mut f);
    f
}

/// Replaces each coefficient by `(f(k) + conj f(-k)) / 2`.
pub fn hermitian_part(f: &mut SpectralField) {
    let g = f.grid().clone();
    for c in 0..f.components() {
        let src = f.coeffs(c).to_vec();
        for (idx, z) in f.coeffs_mut(c).iter_mut().enumerate() {
            *z = 0.5 * (src[idx] + src[g.negate(idx)].conj());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mode(grid: &Arc<Grid>, m1: f64, m2: f64) -> SpectralField {
        // unit L2 norm: sqrt(2) cos(k.x)
        SpectralField::from_fn(grid, move |x, y| 2f64.sqrt() * (m1 * x + m2 * y).cos())
    }

    #[test]
    fn chi_support_values() {
        let bank = DyadicFilterBank::new(&Grid::with_size(16).unwrap()).unwrap();
        assert_eq!(bank.chi(0.5), 1.0);
        assert_eq!(bank.chi(1.5), 0.0);
        let c1 = bank.chi(1.0);
        assert!(c1 > 0.0 && c1 < 1.0);
        assert!((bank.phi(1.0) + bank.phi(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let g = Grid::with_size(64).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        assert!(bank.partition_defect() < 1e-13);
        // 50 random wavenumbers, direct summation of chi and phi
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let idx = rng.random_range(0..g.len());
            let r = g.k_norm(idx);
            let sum = bank.chi(r)
                + (0..=bank.j_max())
                    .map(|j| bank.phi(r / 2f64.powi(j)))
                    .sum::<f64>();
            assert!((sum - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn blocks_are_quasi_orthogonal() {
        let g = Grid::with_size(64).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        for j in bank.indices() {
            for jp in bank.indices().filter(|&jp| (jp - j).abs() >= 2) {
                let a = bank.block_symbol(j).unwrap();
                let b = bank.block_symbol(jp).unwrap();
                assert!(a.iter().zip(b).all(|(x, y)| x * y == 0.0), "{j} {jp}");
            }
        }
        let f = random_field(&g, 3);
        let d = bank
            .dyadic_block(&bank.dyadic_block(&f, 3).unwrap(), 0)
            .unwrap();
        assert_eq!(d.max_abs_coeff(), 0.0);
    }

    #[test]
    fn reconstruction_and_cutoffs() {
        let g = Grid::with_size(32).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        let f = random_field(&g, 4);
        let mut sum = SpectralField::zeros(&g, 1);
        for j in bank.indices() {
            sum.axpy(1.0, &bank.dyadic_block(&f, j).unwrap());
        }
        assert!(sum.max_abs_diff(&f) < 1e-12);

        let mut partial = SpectralField::zeros(&g, 1);
        for j in 0..=bank.j_max() + 1 {
            partial.axpy(1.0, &bank.dyadic_block(&f, j - 1).unwrap());
            assert!(bank.low_cutoff(&f, j).unwrap().max_abs_diff(&partial) < 1e-14);
        }
        assert!(matches!(bank.dyadic_block(&f, -2), Err(Error::Domain(_))));
        assert!(matches!(bank.dyadic_block(&f, bank.j_max() + 1), Err(Error::Domain(_))));
    }

    #[test]
    fn single_mode_two_occupies_blocks_zero_and_one() {
        let g = Grid::with_size(16).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        let f = mode(&g, 2.0, 0.0);
        for j in bank.indices() {
            let nz = bank.dyadic_block(&f, j).unwrap().max_abs_coeff() > 1e-13;
            assert_eq!(nz, j == 0 || j == 1, "block {j}");
        }
        let req = BesovNormRequest::new(0.0, 2.0, 1.0).unwrap();
        let b = bank.besov_norm(&f, &req).unwrap();
        assert!((b - f.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn besov_norm_cases() {
        let g = Grid::with_size(32).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        let req = BesovNormRequest::new(1.0, 2.0, 2.0).unwrap();
        assert_eq!(bank.besov_norm(&SpectralField::zeros(&g, 1), &req).unwrap(), 0.0);
        assert!(matches!(
            BesovNormRequest::new(1.0, 3.0, 2.0),
            Err(Error::Unsupported(_))
        ));
        assert!(BesovNormRequest::new(1.0, 2.0, 0.5).is_err());

        let f = random_field(&g, 5);
        let direct: f64 = bank
            .indices()
            .map(|j| {
                4f64.powi(j) * bank.dyadic_block(&f, j).unwrap().norm_sq()
            })
            .sum();
        let b = bank.besov_norm(&f, &req).unwrap();
        assert!((b * b - direct).abs() < 1e-12 * direct);

        let sup = BesovNormRequest::new(0.5, f64::INFINITY, f64::INFINITY).unwrap();
        assert!(bank.besov_norm(&f, &sup).unwrap() > 0.0);
    }

    #[test]
    fn bernstein_ratio_cases() {
        let g = Grid::with_size(64).unwrap();
        let f = mode(&g, 8.0, 0.0);
        assert!((bernstein_ratio(&f, 3, 1.5).unwrap() - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_shell_field(&g, 3, &mut rng);
        assert!((bernstein_ratio(&s, 3, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let r = bernstein_ratio(&s, 3, 1.5).unwrap();
        assert!(r >= 0.75f64.powf(1.5) && r <= (8.0f64 / 3.0).powf(1.5));
        // 0.6495 and 4.3546
        assert!((0.75f64.powf(1.5) - 0.649519).abs() < 1e-6);
        assert!(((8.0f64 / 3.0).powf(1.5) - 4.354648).abs() < 1e-6);
        assert!(matches!(
            bernstein_ratio(&mode(&g, 1.0, 0.0), 3, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_mode_decay_is_exact() {
        let g = Grid::with_size(32).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        let f = mode(&g, 3.0, 4.0);
        // |k| = 5 sits in blocks 1 and 2
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let fit = semigroup_block_decay(&bank, &f, 2, 1.0, &ts).unwrap();
        assert!((fit.slope + 5.0).abs() < 1e-6);
        assert!(fit.within_bracket());
        assert!(matches!(
            semigroup_block_decay(&bank, &SpectralField::zeros(&g, 1), 2, 1.0, &ts),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn majorant_cases() {
        let g = Grid::with_size(32).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        let zero = SpectralField::zeros(&g, 2);
        assert_eq!(bank.besov_majorant_grad_linf(&zero).unwrap(), 0.0);

        let u = SpectralField::vector_from_fn(&g, |_, y| (2.0 * y).sin(), |_, _| 0.0);
        let grad_linf = 2.0;
        let m = bank.besov_majorant_grad_linf(&u).unwrap();
        // |k| <= 8/3 2^j on block j, so the ratio is at least 3/8
        let c = m / grad_linf;
        println!("majorant / ||grad u||_inf = {c}");
        assert!(c >= 3.0 / 8.0);

        // zeroing high shells can only lower the majorant
        let full = SpectralField::vector_from_fn(&g, |x, y| (2.0 * y).sin() + 0.3 * (9.0 * x).cos(), |x, _| (5.0 * x).sin());
        let mf = bank.besov_majorant_grad_linf(&full).unwrap();
        let trunc = full.map_modes(|idx| if g.k_norm(idx) > 6.0 { 0.0 } else { 1.0 });
        assert!(bank.besov_majorant_grad_linf(&trunc).unwrap() <= mf + 1e-14);
    }

    #[test]
    fn non_monotone_profile_rejected() {
        let g = Grid::with_size(16).unwrap();
        let bad = TransitionProfile::Table(vec![1.0, 0.2, 0.6, 0.0]);
        assert!(matches!(
            DyadicFilterBank::with_profile(&g, bad),
            Err(Error::Invariant(_))
        ));
        let ok = TransitionProfile::Table(vec![1.0, 0.5, 0.0]);
        let bank = DyadicFilterBank::with_profile(&g, ok).unwrap();
        assert!(bank.partition_defect() < 1e-13);
    }
}
