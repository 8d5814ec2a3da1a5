//! Gaussian shift model `x = theta + xi`, `xi ~ N(0, Sigma)`, and its
//! n-sample sequence form `x_j = theta + z_j`.

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::StandardNormal;

use crate::adaptive::SampleBatch;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng;

/// Noise covariance in one of three storage forms.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// `variance * I_dim`.
    ScalarIdentity { variance: f64, dim: usize },
    /// Diagonal matrix of per-axis variances.
    Diagonal(Vec<f64>),
    /// Dense symmetric positive definite matrix.
    Dense(SymMatrix),
}

impl CovarianceSpec {
    pub fn scalar_identity(variance: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if !variance.is_finite() {
            return Err(Error::NonFinite(0));
        }
        if variance <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self::ScalarIdentity { variance, dim })
    }

    pub fn diagonal(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if let Some(pos) = variances.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        if variances.iter().any(|v| *v <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self::Diagonal(variances))
    }

    /// Dense form; symmetry and positive definiteness are checked.
    pub fn dense(matrix: SymMatrix) -> Result<Self> {
        matrix.cholesky()?;
        Ok(Self::Dense(matrix))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ScalarIdentity { dim, .. } => *dim,
            Self::Diagonal(v) => v.len(),
            Self::Dense(m) => m.dim(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        !matches!(self, Self::Dense(_))
    }

    /// Variance of coordinate `i`.
    pub fn axis_variance(&self, i: usize) -> f64 {
        match self {
            Self::ScalarIdentity { variance, .. } => *variance,
            Self::Diagonal(v) => v[i],
            Self::Dense(m) => m.get(i, i),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Dense(m) => m.get(i, j),
            _ if i == j => self.axis_variance(i),
            _ => 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::ScalarIdentity { variance, dim } => variance * *dim as f64,
            Self::Diagonal(v) => v.iter().sum(),
            Self::Dense(m) => m.trace(),
        }
    }

    /// `||Sigma||_op`, the noise level sigma^2.
    pub fn operator_norm(&self) -> Result<f64> {
        match self {
            Self::ScalarIdentity { variance, .. } => Ok(*variance),
            Self::Diagonal(v) => Ok(v.iter().fold(0.0_f64, |m, x| m.max(*x))),
            Self::Dense(m) => m.largest_eigenvalue(),
        }
    }

    /// `r(Sigma) = tr(Sigma) / ||Sigma||_op`.
    pub fn effective_rank(&self) -> Result<f64> {
        Ok(self.trace() / self.operator_norm()?)
    }

    /// `<Sigma z, z>`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        match self {
            Self::ScalarIdentity { variance, .. } => {
                variance * z.iter().map(|x| x * x).sum::<f64>()
            }
            Self::Diagonal(v) => v.iter().zip(z).map(|(s, x)| s * x * x).sum(),
            Self::Dense(m) => m.quad_form(z),
        }
    }

    /// Multiplies every entry by `factor` (used for `Sigma = Sigma_0 / n`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::ScalarIdentity { variance, dim } => {
                Self::scalar_identity(variance * factor, *dim)
            }
            Self::Diagonal(v) => Self::diagonal(v.iter().map(|x| x * factor).collect()),
            Self::Dense(m) => Self::dense(m.scaled(factor)),
        }
    }

    fn sampler(&self) -> Result<NoiseSampler> {
        Ok(match self {
            Self::ScalarIdentity { variance, dim } => NoiseSampler::Scalar {
                sd: libm::sqrt(*variance),
                dim: *dim,
            },
            Self::Diagonal(v) => NoiseSampler::Diagonal(v.iter().map(|x| libm::sqrt(*x)).collect()),
            Self::Dense(m) => NoiseSampler::Factor {
                dim: m.dim(),
                lower: m.cholesky()?,
            },
        })
    }
}

/// Draws `N(0, Sigma)` vectors; dense covariances use the Cholesky factor.
#[derive(Debug, Clone)]
pub(crate) enum NoiseSampler {
    Scalar { sd: f64, dim: usize },
    Diagonal(Vec<f64>),
    Factor { dim: usize, lower: Vec<f64> },
}

impl NoiseSampler {
    pub(crate) fn add_noise<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Scalar { sd, .. } => {
                for o in out.iter_mut() {
                    *o += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Self::Diagonal(sds) => {
                for (o, sd) in out.iter_mut().zip(sds) {
                    *o += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Self::Factor { dim, lower } => {
                let z: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..*dim {
                    let row = &lower[i * dim..i * dim + i + 1];
                    out[i] += row.iter().zip(&z).map(|(l, zi)| l * zi).sum::<f64>();
                }
            }
        }
    }

    #[allow(dead_code)]
    pub(crate) fn dim(&self) -> usize {
        match self {
            Self::Scalar { dim, .. } | Self::Factor { dim, .. } => *dim,
            Self::Diagonal(v) => v.len(),
        }
    }
}

/// Result of the cutoff-level rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffLevel {
    /// `N`, clamped below at zero.
    pub level: u32,
    /// Unrounded `(log2(1/||Sigma||) - log2 r(Sigma) - 2) / 2`.
    pub raw: f64,
    /// `||Sigma|| r(Sigma) >= 1`: no frequency budget, the estimator degenerates to `g = 0`.
    pub noise_too_large: bool,
}

/// `N = ceil((log2(1/||Sigma||_op) - log2 r(Sigma) - 2) / 2)`, clamped at 0.
pub fn cutoff_level(cov: &CovarianceSpec) -> Result<CutoffLevel> {
    let norm = cov.operator_norm()?;
    let rank = cov.trace() / norm;
    Ok(cutoff_level_from(norm, rank))
}

pub fn cutoff_level_from(operator_norm: f64, effective_rank: f64) -> CutoffLevel {
    let raw = (libm::log2(1.0 / operator_norm) - libm::log2(effective_rank) - 2.0) / 2.0;
    // ceil of a value that is an integer up to rounding must not jump a level
    let level = libm::ceil(raw - 1e-12).max(0.0) as u32;
    CutoffLevel {
        level,
        raw,
        noise_too_large: operator_norm * effective_rank >= 1.0,
    }
}

/// A single-observation shift model.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftModel {
    theta: Vec<f64>,
    covariance: CovarianceSpec,
}

impl ShiftModel {
    pub fn new(theta: Vec<f64>, covariance: CovarianceSpec) -> Result<Self> {
        if theta.len() != covariance.dim() {
            return Err(Error::DimensionMismatch {
                expected: covariance.dim(),
                found: theta.len(),
            });
        }
        if let Some(pos) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { theta, covariance })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn covariance(&self) -> &CovarianceSpec {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `x = theta + Sigma^{1/2} z` from a caller-owned generator.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let sampler = self.covariance.sampler()?;
        let mut x = self.theta.clone();
        sampler.add_noise(rng, &mut x);
        Ok(x)
    }

    /// Draws repeatedly without refactoring the covariance on each call.
    pub fn sampler(&self) -> Result<ObservationSampler<'_>> {
        Ok(ObservationSampler {
            model: self,
            noise: self.covariance.sampler()?,
        })
    }
}

/// Reusable sampler bound to a [`ShiftModel`].
#[derive(Debug, Clone)]
pub struct ObservationSampler<'a> {
    model: &'a ShiftModel,
    noise: NoiseSampler,
}

impl ObservationSampler<'_> {
    pub fn draw_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.copy_from_slice(&self.model.theta);
        self.noise.add_noise(rng, out);
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.model.dim()];
        self.draw_into(rng, &mut out);
        out
    }
}

/// One observation `theta + xi`, deterministic in `seed`.
pub fn draw_observation(model: &ShiftModel, seed: u64) -> Result<Vec<f64>> {
    model.sample(&mut rng::seeded(seed))
}

/// n i.i.d. observations sharing `theta`, with `z_j ~ N(0, Sigma_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModelConfig {
    theta: Vec<f64>,
    base_covariance: CovarianceSpec,
    sample_count: usize,
}

impl SequenceModelConfig {
    pub fn new(
        theta: Vec<f64>,
        base_covariance: CovarianceSpec,
        sample_count: usize,
    ) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::TooFewObservations(sample_count));
        }
        // reuse the shift-model checks
        ShiftModel::new(theta.clone(), base_covariance.clone())?;
        Ok(Self {
            theta,
            base_covariance,
            sample_count,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn base_covariance(&self) -> &CovarianceSpec {
        &self.base_covariance
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// `Sigma = Sigma_0 / n`, the covariance of the sample mean.
    pub fn mean_covariance(&self) -> Result<CovarianceSpec> {
        self.base_covariance.scaled(1.0 / self.sample_count as f64)
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<SampleBatch> {
        let d = self.theta.len();
        let noise = self.base_covariance.sampler()?;
        let mut obs = vec![0.0; d * self.sample_count];
        for row in obs.chunks_exact_mut(d) {
            row.copy_from_slice(&self.theta);
            noise.add_noise(rng, row);
        }
        SampleBatch::from_flat(d, obs)
    }
}

/// Batch of `n` observations, deterministic in `seed`.
pub fn draw_batch(cfg: &SequenceModelConfig, seed: u64) -> Result<SampleBatch> {
    cfg.sample(&mut rng::seeded(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operator_norm() {
        let c = CovarianceSpec::scalar_identity(1.0, 5).unwrap();
        assert_eq!(c.operator_norm().unwrap(), 1.0);
    }

    #[test]
    fn diagonal_norm_and_rank() {
        let c = CovarianceSpec::diagonal(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.operator_norm().unwrap(), 2.0);
        let c = CovarianceSpec::diagonal(vec![1.0, 0.5, 0.5]).unwrap();
        assert!((c.effective_rank().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_identity_rank_is_dimension() {
        let c = CovarianceSpec::scalar_identity(0.37, 100).unwrap();
        assert!((c.effective_rank().unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_level_from(1e-4, 100.0).level, 3);
        assert_eq!(cutoff_level_from(1e-4, 1.0).level, 6);
        let c = cutoff_level_from(0.25, 1.0);
        assert_eq!(c.level, 0);
        assert!(!c.noise_too_large);
    }

    #[test]
    fn cutoff_clamps_large_noise() {
        let c = cutoff_level_from(2.0, 3.0);
        assert_eq!(c.level, 0);
        assert!(c.noise_too_large);
        assert!(c.raw < 0.0);
    }

    #[test]
    fn invalid_covariances() {
        assert_eq!(
            CovarianceSpec::diagonal(vec![1.0, -1.0]),
            Err(Error::NotPositiveDefinite)
        );
        assert!(CovarianceSpec::scalar_identity(1.0, 0).is_err());
        let m = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(CovarianceSpec::dense(m), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn dimension_mismatch() {
        let c = CovarianceSpec::scalar_identity(1.0, 3).unwrap();
        assert!(matches!(
            ShiftModel::new(vec![0.0; 2], c),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn near_zero_noise_returns_theta() {
        let theta = vec![0.1, -0.4, 2.5];
        let m = ShiftModel::new(
            theta.clone(),
            CovarianceSpec::scalar_identity(1e-30, 3).unwrap(),
        )
        .unwrap();
        let x = draw_observation(&m, 9).unwrap();
        for (a, b) in x.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn batch_requires_two_observations() {
        let c = CovarianceSpec::scalar_identity(1.0, 1).unwrap();
        assert_eq!(
            SequenceModelConfig::new(vec![0.0], c, 1),
            Err(Error::TooFewObservations(1))
        );
    }

    #[test]
    fn batch_seed_determinism() {
        let c = CovarianceSpec::diagonal(vec![1.0, 2.0]).unwrap();
        let cfg = SequenceModelConfig::new(vec![0.5, 0.5], c, 5).unwrap();
        assert_eq!(draw_batch(&cfg, 3).unwrap(), draw_batch(&cfg, 3).unwrap());
        assert_ne!(draw_batch(&cfg, 3).unwrap(), draw_batch(&cfg, 4).unwrap());
    }

    #[test]
    fn zero_noise_batch_mean_is_theta() {
        let c = CovarianceSpec::scalar_identity(1e-30, 2).unwrap();
        let cfg = SequenceModelConfig::new(vec![0.3, 0.7], c, 2).unwrap();
        let b = draw_batch(&cfg, 1).unwrap();
        assert!((b.mean()[0] - 0.3).abs() < 1e-12);
        assert!((b.mean()[1] - 0.7).abs() < 1e-12);
    }
}
