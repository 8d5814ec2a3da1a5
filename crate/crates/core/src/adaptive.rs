//! Unknown-covariance pipeline.
//!
//! From `n` observations `x_j = theta + z_j` the successive differences
//! `beta_j = sqrt((j-1)/j) (x_j - xbar_{j-1})`, `j = 2..n`, are i.i.d.
//! `N(0, Sigma_0)` and independent of `xbar`. They give
//! `Sigma0_hat = (n-1)^{-1} sum beta_j beta_j'`, `Sigma_hat = Sigma0_hat / n`
//! and the cutoff estimate `N_hat = log2(n / tr Sigma0_hat) / 2 - 1`.
//!
//! `sum_j beta_j beta_j'` is exactly the co-moment matrix maintained by
//! Welford's update, so [`MomentAccumulator`] produces the same estimate in
//! one pass without storing the batch.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::{TruncatedSpectrum, TruncationChoice, DEFAULT_OVERFLOW_GUARD};
use crate::linalg::SymMatrix;
use crate::model::CovarianceSpec;
use crate::spectral::{DyadicPartition, Spectrum1D};

/// `n` observations of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    data: Vec<f64>,
    mean: Vec<f64>,
}

impl SampleBatch {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid(
                "observation dimension must be positive".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim * (data.len() / dim + 1),
                found: data.len(),
            });
        }
        let n = data.len() / dim;
        if n < 2 {
            return Err(Error::TooFewObservations(n));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let mut acc = MomentAccumulator::new(dim, CovarianceForm::Diagonal);
        for row in data.chunks_exact(dim) {
            acc.push(row);
        }
        let mean = acc.mean().to_vec();
        Ok(Self { dim, data, mean })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn observation(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn observations(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Sample mean `xbar`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

/// `beta_j = sqrt((j-1)/j) (x_j - xbar_{j-1})` for `j = 2..n`.
pub fn successive_differences(batch: &SampleBatch) -> Vec<Vec<f64>> {
    let d = batch.dim();
    let mut running = batch.observation(0).to_vec();
    let mut out = Vec::with_capacity(batch.len() - 1);
    for (idx, x) in batch.observations().enumerate().skip(1) {
        let j = (idx + 1) as f64;
        let scale = libm::sqrt((j - 1.0) / j);
        let beta: Vec<f64> = x
            .iter()
            .zip(&running)
            .map(|(xi, mi)| scale * (xi - mi))
            .collect();
        for i in 0..d {
            running[i] += (x[i] - running[i]) / j;
        }
        out.push(beta);
    }
    out
}

/// Which part of `Sigma0_hat` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceForm {
    /// Full `d x d` matrix (tensor path, small `d`).
    Full,
    /// Per-coordinate variances only (separable path).
    Diagonal,
}

/// Estimated base covariance `Sigma0_hat`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSummary {
    Full(SymMatrix),
    Diagonal(Vec<f64>),
}

impl CovarianceSummary {
    pub fn dim(&self) -> usize {
        match self {
            Self::Full(m) => m.dim(),
            Self::Diagonal(v) => v.len(),
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        match self {
            Self::Full(m) => m.get(i, i),
            Self::Diagonal(v) => v[i],
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.diagonal(i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Full(m) => Self::Full(m.scaled(factor)),
            Self::Diagonal(v) => Self::Diagonal(v.iter().map(|x| x * factor).collect()),
        }
    }

    /// Largest eigenvalue; for the diagonal summary the largest variance.
    pub fn operator_norm(&self) -> Result<f64> {
        match self {
            Self::Full(m) => m.largest_eigenvalue(),
            Self::Diagonal(v) => Ok(v.iter().fold(0.0_f64, |a, b| a.max(*b))),
        }
    }

    /// Converts to a validated covariance (fails when singular).
    pub fn to_covariance(&self) -> Result<CovarianceSpec> {
        match self {
            Self::Full(m) => CovarianceSpec::dense(m.clone()),
            Self::Diagonal(v) => CovarianceSpec::diagonal(v.clone()),
        }
    }
}

/// One-pass accumulator of the mean and of `sum_j beta_j beta_j'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    form: CovarianceForm,
    count: usize,
    mean: Vec<f64>,
    /// Diagonal form: `d` entries. Full form: `d*d` row-major.
    comoment: Vec<f64>,
    delta: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize, form: CovarianceForm) -> Self {
        let size = match form {
            CovarianceForm::Full => dim * dim,
            CovarianceForm::Diagonal => dim,
        };
        Self {
            form,
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; size],
            delta: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.count += 1;
        let k = self.count as f64;
        // beta = sqrt((k-1)/k) (x - mean_old); beta beta' = (k-1)/k delta delta'
        let w = (k - 1.0) / k;
        for ((dl, m), xi) in self.delta.iter_mut().zip(&mut self.mean).zip(x) {
            *dl = xi - *m;
            *m += *dl / k;
        }
        match self.form {
            CovarianceForm::Diagonal => {
                for (c, dl) in self.comoment.iter_mut().zip(&self.delta) {
                    *c += w * dl * dl;
                }
            }
            CovarianceForm::Full => {
                for i in 0..d {
                    let di = w * self.delta[i];
                    let row = &mut self.comoment[i * d..(i + 1) * d];
                    for (c, dj) in row.iter_mut().zip(&self.delta) {
                        *c += di * dj;
                    }
                }
            }
        }
    }

    /// `Sigma0_hat = comoment / (n - 1)`.
    pub fn covariance(&self) -> Result<CovarianceSummary> {
        if self.count < 2 {
            return Err(Error::TooFewObservations(self.count));
        }
        let scale = 1.0 / (self.count - 1) as f64;
        let vals: Vec<f64> = self.comoment.iter().map(|c| c * scale).collect();
        Ok(match self.form {
            CovarianceForm::Diagonal => CovarianceSummary::Diagonal(vals),
            CovarianceForm::Full => {
                let d = self.dim();
                let mut m = vals;
                // symmetrize round-off
                for i in 0..d {
                    for j in (i + 1)..d {
                        let avg = 0.5 * (m[i * d + j] + m[j * d + i]);
                        m[i * d + j] = avg;
                        m[j * d + i] = avg;
                    }
                }
                CovarianceSummary::Full(SymMatrix::from_raw(d, m))
            }
        })
    }
}

/// Adaptive cutoff level `N_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveCutoff {
    /// Clamped at 0.
    pub level: f64,
    pub raw: f64,
    /// `n <= tr Sigma0_hat`: no frequency budget.
    pub no_budget: bool,
}

/// `N_hat = log2(n / trace_hat) / 2 - 1`, clamped at 0.
pub fn adaptive_cutoff(trace_hat: f64, n: usize) -> Result<AdaptiveCutoff> {
    if !(trace_hat > 0.0) || !trace_hat.is_finite() {
        return Err(Error::Invalid(
            "estimated trace must be positive and finite".into(),
        ));
    }
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let raw = 0.5 * libm::log2(n as f64 / trace_hat) - 1.0;
    Ok(AdaptiveCutoff {
        level: raw.max(0.0),
        raw,
        no_budget: n as f64 <= trace_hat,
    })
}

/// Everything estimated from a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub n: usize,
    pub sigma0_hat: CovarianceSummary,
    pub trace_hat: f64,
    pub n_hat: AdaptiveCutoff,
}

impl AdaptiveState {
    /// `Sigma_hat = Sigma0_hat / n`.
    pub fn sigma_hat(&self) -> CovarianceSummary {
        self.sigma0_hat.scaled(1.0 / self.n as f64)
    }

    pub fn from_summary(sigma0_hat: CovarianceSummary, n: usize) -> Result<Self> {
        let trace_hat = sigma0_hat.trace();
        let n_hat = adaptive_cutoff(trace_hat, n)?;
        Ok(Self {
            n,
            sigma0_hat,
            trace_hat,
            n_hat,
        })
    }
}

/// `Sigma0_hat = (n-1)^{-1} sum beta_j beta_j'` from explicit differences.
pub fn estimate_covariance(
    diffs: &[Vec<f64>],
    n: usize,
    form: CovarianceForm,
) -> Result<AdaptiveState> {
    let d = diffs
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::TooFewObservations(diffs.len() + 1))?;
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let scale = 1.0 / (n - 1) as f64;
    let summary = match form {
        CovarianceForm::Diagonal => {
            let mut v = vec![0.0; d];
            for b in diffs {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += bi * bi;
                }
            }
            CovarianceSummary::Diagonal(v.into_iter().map(|x| x * scale).collect())
        }
        CovarianceForm::Full => {
            let mut m = vec![0.0; d * d];
            for b in diffs {
                for i in 0..d {
                    for j in 0..d {
                        m[i * d + j] += b[i] * b[j];
                    }
                }
            }
            CovarianceSummary::Full(SymMatrix::from_raw(
                d,
                m.into_iter().map(|x| x * scale).collect(),
            ))
        }
    };
    AdaptiveState::from_summary(summary, n)
}

/// How the adaptive level is turned into a truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptiveTruncation {
    /// `K_hat = round(K 2^{N_hat - N})` relative to a reference pair `(K, N)`,
    /// where `N` is the unrounded level of the known covariance.
    Hard {
        reference_k: usize,
        reference_level: f64,
    },
    /// Dyadic cutoff at `ceil(N_hat)`.
    Dyadic { partition: DyadicPartition },
}

impl AdaptiveTruncation {
    /// Truncation used for `N_hat`, with the per-axis index capped at `max_k`.
    pub fn resolve(&self, n_hat: f64, max_k: usize) -> TruncationChoice {
        match *self {
            Self::Hard {
                reference_k,
                reference_level,
            } => {
                let k = reference_k as f64 * libm::exp2(n_hat - reference_level);
                TruncationChoice::Hard((libm::round(k) as usize).min(max_k))
            }
            Self::Dyadic { partition } => TruncationChoice::Dyadic {
                level: libm::ceil(n_hat) as u32,
                partition,
            },
        }
    }
}

/// White-box override: force the estimated quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOverride {
    /// Per-axis noise variance of the mean, i.e. `diag(Sigma_hat)`.
    pub noise_variances: Vec<f64>,
    pub n_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub truncation: AdaptiveTruncation,
    pub guard: f64,
    pub overrides: Option<AdaptiveOverride>,
}

impl AdaptiveConfig {
    pub fn hard(reference_k: usize, reference_level: f64) -> Self {
        Self {
            truncation: AdaptiveTruncation::Hard {
                reference_k,
                reference_level,
            },
            guard: DEFAULT_OVERFLOW_GUARD,
            overrides: None,
        }
    }
}

/// Adaptive estimate and the quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub value: f64,
    pub n_hat: f64,
    pub truncation: TruncationChoice,
}

/// Separable adaptive estimate from sufficient summaries: the sample mean,
/// the per-coordinate variances `diag(Sigma0_hat)` and `n`.
pub fn adaptive_from_moments(
    mean: &[f64],
    sigma0_diag: &[f64],
    n: usize,
    spectrum: &Spectrum1D,
    log_beta: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    if mean.len() != sigma0_diag.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: sigma0_diag.len(),
        });
    }
    let max_k = spectrum.half() as usize;
    let inv_n = 1.0 / n as f64;
    let (n_hat, forced) = match &cfg.overrides {
        Some(o) => {
            if o.noise_variances.len() != mean.len() {
                return Err(Error::DimensionMismatch {
                    expected: mean.len(),
                    found: o.noise_variances.len(),
                });
            }
            (o.n_hat, Some(&o.noise_variances))
        }
        None => {
            let trace: f64 = sigma0_diag.iter().sum();
            (adaptive_cutoff(trace, n)?.level, None)
        }
    };
    let truncation = cfg.truncation.resolve(n_hat, max_k);
    let trunc = TruncatedSpectrum::new(spectrum, truncation)?;
    let variance = |j: usize| match forced {
        Some(v) => v[j],
        None => sigma0_diag[j] * inv_n,
    };
    let v_max = (0..mean.len()).map(variance).fold(0.0_f64, f64::max);
    trunc.check_guard(v_max, cfg.guard)?;
    let value = trunc.debiased_product(log_beta, mean, variance);
    Ok(AdaptiveOutcome {
        value,
        n_hat,
        truncation,
    })
}

/// Full pipeline on a batch: differences, `Sigma_hat`, `N_hat`, truncation,
/// debiasing with `diag(Sigma_hat)` per axis, evaluation at `xbar`.
pub fn adaptive_estimate(
    batch: &SampleBatch,
    spectrum: &Spectrum1D,
    log_beta: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    let state = estimate_covariance(
        &successive_differences(batch),
        batch.len(),
        CovarianceForm::Diagonal,
    )?;
    let diag: Vec<f64> = (0..batch.dim())
        .map(|i| state.sigma0_hat.diagonal(i))
        .collect();
    adaptive_from_moments(batch.mean(), &diag, batch.len(), spectrum, log_beta, cfg)
}
