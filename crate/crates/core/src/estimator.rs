//! The debiased estimator
//!
//! ```text
//! g(x) = sum_{zeta in Omega} c_zeta exp(<Sigma zeta, zeta> / 2) exp(i zeta . x)
//! ```
//!
//! where `c_zeta` are the retained trigonometric coefficients of `f`. Each
//! retained mode is multiplied by the reciprocal of its Gaussian damping
//! factor, so `E g(theta + xi)` is the truncated interpolant of `f` at `theta`.
//!
//! Two evaluation paths exist. For `f(theta) = beta prod_j h(theta_j)` with a
//! diagonal covariance the d-dimensional sum factorizes into one-dimensional
//! sums ([`DebiasedEvaluator1D`], [`eval_product`]). The tensor path
//! ([`TensorEvaluator`]) enumerates multi-frequencies and handles dense
//! covariances for `d <= 3`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CovarianceSpec;
use crate::spectral::{self, DyadicPartition, GridFunction1D, Spectrum1D, SpectrumNd};

/// Largest admissible exponent `v zeta^2 / 2` of the debiasing multiplier.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 700.0;

/// Upper bound on the number of retained multi-frequencies on the tensor path.
pub const TENSOR_TERM_LIMIT: usize = 10_000_000;

/// How the spectrum is cut before debiasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationChoice {
    /// Keep `|k| <= K` on every axis.
    Hard(usize),
    /// Smooth dyadic cutoff at level `N`: weights `sum_{j<=N} phi_j(|zeta|)`.
    Dyadic {
        level: u32,
        partition: DyadicPartition,
    },
}

impl TruncationChoice {
    pub fn dyadic(level: u32) -> Self {
        Self::Dyadic {
            level,
            partition: DyadicPartition::default(),
        }
    }
}

/// Retained non-negative-index coefficients of a real spectrum.
///
/// Stores `c_0, c_1, ..., c_K` with the Nyquist coefficient already halved;
/// negative indices follow from conjugate symmetry. The debiasing variance is
/// applied at evaluation time, which is what the adaptive estimator needs
/// (one variance per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpectrum {
    origin: f64,
    omega0: f64,
    coeffs: Vec<Complex64>,
}

impl TruncatedSpectrum {
    pub fn new(spec: &Spectrum1D, cutoff: TruncationChoice) -> Result<Self> {
        if !spec.is_real() {
            return Err(Error::NotRealSpectrum);
        }
        let truncated = match cutoff {
            TruncationChoice::Hard(k) => spectral::hard_truncate(spec, k)?,
            TruncationChoice::Dyadic { level, partition } => {
                spectral::lp_truncate(spec, level, &partition)
            }
        };
        let half = spec.half();
        let k_max = match cutoff {
            TruncationChoice::Hard(k) => k as i64,
            TruncationChoice::Dyadic { level, .. } => {
                // phi-weights vanish from |zeta| >= 2^{N+1}
                let edge = libm::exp2(level as f64 + 1.0) / spec.base_frequency();
                ((libm::ceil(edge) as i64) - 1).clamp(0, half)
            }
        };
        let mut coeffs = Vec::with_capacity(k_max as usize + 1);
        for k in 0..=k_max {
            let c = truncated.coefficient(k);
            coeffs.push(if k == half && k > 0 { c * 0.5 } else { c });
        }
        Ok(Self {
            origin: spec.domain().0,
            omega0: spec.base_frequency(),
            coeffs,
        })
    }

    /// Largest retained index.
    pub fn max_index(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn base_frequency(&self) -> f64 {
        self.omega0
    }

    /// Checks `v zeta_K^2 / 2 <= guard` at the highest retained index.
    pub fn check_guard(&self, variance: f64, guard: f64) -> Result<()> {
        let k = self.max_index();
        let z = k as f64 * self.omega0;
        let exponent = variance * z * z / 2.0;
        if !(exponent <= guard) {
            return Err(Error::OverflowGuard {
                index: k as i64,
                exponent,
                guard,
            });
        }
        Ok(())
    }

    /// Debiased one-dimensional value at `x` for noise variance `variance`.
    ///
    /// The multipliers `exp(v (k w)^2 / 2)` are generated by the recurrence
    /// `q^{(k+1)^2} = q^{k^2} q^{2k+1}` with `q = exp(v w^2 / 2)`.
    pub fn debiased_value(&self, x: f64, variance: f64) -> f64 {
        let t = x - self.origin;
        let rot = Complex64::cis(self.omega0 * t);
        let q = libm::exp(variance * self.omega0 * self.omega0 / 2.0);
        let q2 = q * q;
        let mut phase = Complex64::new(1.0, 0.0);
        let mut mult = 1.0;
        let mut step = q;
        let mut acc = self.coeffs[0].re;
        let mut tail = Complex64::new(0.0, 0.0);
        for c in &self.coeffs[1..] {
            phase *= rot;
            mult *= step;
            step *= q2;
            tail += c * phase * mult;
        }
        acc += 2.0 * tail.re;
        acc
    }

    /// `exp(log_beta) prod_j g_1(x_j; v_j)` with per-coordinate variances `v_j`.
    pub fn debiased_product(
        &self,
        log_beta: f64,
        x: &[f64],
        variances: impl Fn(usize) -> f64,
    ) -> f64 {
        scaled_product(
            log_beta,
            x.iter()
                .enumerate()
                .map(|(j, xj)| self.debiased_value(*xj, variances(j))),
        )
    }

    /// Evaluator with precomputed weights for a fixed noise variance.
    pub fn debias(&self, variance: f64, guard: f64) -> Result<DebiasedEvaluator1D> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::Invalid(
                "noise variance must be finite and non-negative".into(),
            ));
        }
        self.check_guard(variance, guard)?;
        let weights = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let z = k as f64 * self.omega0;
                c * libm::exp(variance * z * z / 2.0)
            })
            .collect();
        Ok(DebiasedEvaluator1D {
            origin: self.origin,
            omega0: self.omega0,
            variance,
            weights,
        })
    }
}

/// One-dimensional debiased evaluator with weights `w_k = c_k exp(v zeta_k^2 / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedEvaluator1D {
    origin: f64,
    omega0: f64,
    variance: f64,
    /// `w_0 ..= w_K`; `w_{-k} = conj(w_k)`.
    weights: Vec<Complex64>,
}

impl DebiasedEvaluator1D {
    pub fn noise_variance(&self) -> f64 {
        self.variance
    }

    pub fn max_index(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn base_frequency(&self) -> f64 {
        self.omega0
    }

    /// `w_k` for `|k| <= K` (Nyquist weight reported split).
    pub fn weight(&self, k: i64) -> Complex64 {
        let w = self.weights[k.unsigned_abs() as usize];
        if k < 0 {
            w.conj()
        } else {
            w
        }
    }

    /// `(zeta_k, w_k)` over every retained index, negative ones included.
    pub fn retained(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let k_max = self.max_index() as i64;
        (-k_max..=k_max).map(move |k| (k as f64 * self.omega0, self.weight(k)))
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let rot = Complex64::cis(self.omega0 * (x - self.origin));
        let mut phase = Complex64::new(1.0, 0.0);
        let mut tail = Complex64::new(0.0, 0.0);
        for w in &self.weights[1..] {
            phase *= rot;
            tail += w * phase;
        }
        self.weights[0].re + 2.0 * tail.re
    }

    /// `sum |w| zeta^2` over retained frequencies, an upper bound on `sup |g''|`.
    pub fn hessian_bound_proxy(&self) -> f64 {
        self.retained().map(|(z, w)| w.norm() * z * z).sum()
    }
}

/// Builds the one-dimensional debiased evaluator for `spec` under noise variance `noise_variance`.
pub fn build_debiased_1d(
    spec: &Spectrum1D,
    noise_variance: f64,
    cutoff: TruncationChoice,
    guard: f64,
) -> Result<DebiasedEvaluator1D> {
    TruncatedSpectrum::new(spec, cutoff)?.debias(noise_variance, guard)
}

/// One-dimensional base function `h` of a product functional.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseFunction {
    /// `(2x)^s`, sampled on `[-1, 1]` as its even extension `|2x|^s`.
    Power {
        exponent: f64,
    },
    /// `cos(2 pi x)` on `[0, 1]`.
    Cosine,
    /// `sin(2 pi x)` on `[0, 1]`.
    Sine,
    /// `x` on `[0, 1]`.
    Linear,
    Constant(f64),
    /// User-supplied samples; values and derivatives come from the interpolant.
    Sampled(Spectrum1D),
}

impl BaseFunction {
    pub fn sampled(grid: &GridFunction1D) -> Result<Self> {
        Ok(Self::Sampled(spectral::analyze(grid)?))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Power { exponent } => libm::pow(libm::fabs(2.0 * x), *exponent),
            Self::Cosine => libm::cos(2.0 * PI * x),
            Self::Sine => libm::sin(2.0 * PI * x),
            Self::Linear => x,
            Self::Constant(c) => *c,
            Self::Sampled(s) => s.synthesize_complex_at(x).re,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::Power { exponent } => {
                let s = *exponent;
                2.0 * s * libm::pow(libm::fabs(2.0 * x), s - 1.0) * if x < 0.0 { -1.0 } else { 1.0 }
            }
            Self::Cosine => -2.0 * PI * libm::sin(2.0 * PI * x),
            Self::Sine => 2.0 * PI * libm::cos(2.0 * PI * x),
            Self::Linear => 1.0,
            Self::Constant(_) => 0.0,
            Self::Sampled(s) => s.derivative_at(x).unwrap_or(f64::NAN),
        }
    }

    /// Periodic sampling domain used to build the spectrum.
    pub fn natural_domain(&self) -> (f64, f64) {
        match self {
            Self::Power { .. } => (-1.0, 1.0),
            Self::Sampled(s) => s.domain(),
            _ => (0.0, 1.0),
        }
    }

    /// Spectrum of `h` on its natural domain with `m` samples.
    pub fn spectrum(&self, m: usize) -> Result<Spectrum1D> {
        if let Self::Sampled(s) = self {
            return Ok(s.clone());
        }
        let (a, b) = self.natural_domain();
        spectral::analyze(&GridFunction1D::from_fn(a, b, m, |x| self.value(x))?)
    }
}

/// `f(theta) = beta prod_{j=1}^{d} h(theta_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction {
    base: BaseFunction,
    dim: usize,
    log_beta: f64,
}

impl ProductFunction {
    pub fn new(base: BaseFunction, dim: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Invalid(
                "normalizer beta must be positive and finite".into(),
            ));
        }
        Self::with_log_beta(base, dim, libm::log(beta))
    }

    /// Same as [`new`](Self::new) but takes `ln beta`, for normalizers outside
    /// the floating-point range (large `d`).
    pub fn with_log_beta(base: BaseFunction, dim: usize, log_beta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if !log_beta.is_finite() {
            return Err(Error::Invalid("ln beta must be finite".into()));
        }
        Ok(Self {
            base,
            dim,
            log_beta,
        })
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        libm::exp(self.log_beta)
    }

    pub fn log_beta(&self) -> f64 {
        self.log_beta
    }

    /// `f(theta)` evaluated in log-magnitude form.
    pub fn value(&self, theta: &[f64]) -> f64 {
        scaled_product(self.log_beta, theta.iter().map(|t| self.base.value(*t)))
    }

    /// `grad f(theta)` from the analytic (or spectral) derivative of `h`.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = theta.iter().map(|t| self.base.value(*t)).collect();
        let zeros: Vec<usize> = (0..vals.len()).filter(|&j| vals[j] == 0.0).collect();
        let mut grad = vec![0.0; vals.len()];
        match zeros.len() {
            0 => {
                let (sign, log_abs) = sign_log(vals.iter().copied());
                for (j, g) in grad.iter_mut().enumerate() {
                    let dj = self.base.derivative(theta[j]);
                    let others = sign
                        * vals[j].signum()
                        * libm::exp(self.log_beta + log_abs - libm::log(vals[j].abs()));
                    *g = dj * others;
                }
            }
            1 => {
                let j0 = zeros[0];
                let rest = vals
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j0)
                    .map(|(_, v)| *v);
                grad[j0] = self.base.derivative(theta[j0]) * scaled_product(self.log_beta, rest);
            }
            _ => {}
        }
        grad
    }
}

fn sign_log(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for v in values {
        if v < 0.0 {
            sign = -sign;
        }
        log_abs += libm::log(v.abs());
    }
    (sign, log_abs)
}

/// `exp(log_scale) * prod values`, accumulated as sign and log-magnitude.
pub fn scaled_product(log_scale: f64, values: impl Iterator<Item = f64>) -> f64 {
    let (sign, log_abs) = sign_log(values);
    sign * libm::exp(log_scale + log_abs)
}

/// Separable path: `beta prod_j g_1(x_j)`.
pub fn eval_product(evaluator: &DebiasedEvaluator1D, beta: f64, x: &[f64]) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    beta.signum()
        * scaled_product(
            libm::log(beta.abs()),
            x.iter().map(|xi| evaluator.evaluate(*xi)),
        )
}

/// [`eval_product`] with the normalizer given as `ln beta`.
pub fn eval_product_log(evaluator: &DebiasedEvaluator1D, log_beta: f64, x: &[f64]) -> f64 {
    scaled_product(log_beta, x.iter().map(|xi| evaluator.evaluate(*xi)))
}

/// Plug-in estimate `f(x)` from the analytic base function.
pub fn plug_in(f: &ProductFunction, x: &[f64]) -> f64 {
    f.value(x)
}

/// `sqrt(<Sigma grad f, grad f>)`.
pub fn sensitivity_sigma(f: &ProductFunction, theta: &[f64], cov: &CovarianceSpec) -> Result<f64> {
    if theta.len() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: theta.len(),
        });
    }
    Ok(sensitivity_sigma_from_gradient(&f.gradient(theta), cov))
}

pub fn sensitivity_sigma_from_gradient(gradient: &[f64], cov: &CovarianceSpec) -> f64 {
    libm::sqrt(cov.quad_form(gradient).max(0.0))
}

/// One retained multi-frequency of the tensor path.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTerm {
    pub zeta: Vec<f64>,
    pub weight: Complex64,
}

/// General small-d evaluator: `Re sum c_zeta exp(<Sigma zeta, zeta>/2) exp(i zeta . (x - a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEvaluator {
    origin: Vec<f64>,
    terms: Vec<TensorTerm>,
}

impl TensorEvaluator {
    pub fn terms(&self) -> &[TensorTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let t: Vec<f64> = x.iter().zip(&self.origin).map(|(xi, a)| xi - a).collect();
        self.terms
            .iter()
            .map(|term| {
                let phase: f64 = term.zeta.iter().zip(&t).map(|(z, ti)| z * ti).sum();
                (term.weight * Complex64::cis(phase)).re
            })
            .sum()
    }

    /// `sum |w| ||zeta||^2` over retained multi-frequencies.
    pub fn hessian_bound_proxy(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight.norm() * t.zeta.iter().map(|z| z * z).sum::<f64>())
            .sum()
    }
}

fn check_tensor_shape(d: usize, cov: &CovarianceSpec, cutoffs: &[usize]) -> Result<usize> {
    if d == 0 || d > 3 {
        return Err(Error::OutOfRange {
            what: "tensor dimension",
            value: d,
            max: 3,
        });
    }
    if cov.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: cov.dim(),
        });
    }
    if cutoffs.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: cutoffs.len(),
        });
    }
    let count = cutoffs
        .iter()
        .try_fold(1usize, |acc, k| acc.checked_mul(2 * k + 1))
        .unwrap_or(usize::MAX);
    if count > TENSOR_TERM_LIMIT {
        return Err(Error::TensorInfeasible {
            count,
            limit: TENSOR_TERM_LIMIT,
        });
    }
    Ok(count)
}

fn enumerate_tensor(
    cutoffs: &[usize],
    omegas: &[f64],
    cov: &CovarianceSpec,
    guard: f64,
    coefficient: impl Fn(&[i64]) -> Complex64,
) -> Result<Vec<TensorTerm>> {
    let d = cutoffs.len();
    let mut terms = Vec::new();
    let mut k: Vec<i64> = cutoffs.iter().map(|c| -(*c as i64)).collect();
    let mut zeta = vec![0.0; d];
    loop {
        let c = coefficient(&k);
        if c != Complex64::new(0.0, 0.0) {
            for j in 0..d {
                zeta[j] = k[j] as f64 * omegas[j];
            }
            let exponent = cov.quad_form(&zeta) / 2.0;
            if !(exponent <= guard) {
                return Err(Error::OverflowGuard {
                    index: k.iter().map(|v| v.abs()).max().unwrap_or(0),
                    exponent,
                    guard,
                });
            }
            terms.push(TensorTerm {
                zeta: zeta.clone(),
                weight: c * libm::exp(exponent),
            });
        }
        // odometer increment
        let mut ax = d;
        loop {
            if ax == 0 {
                return Ok(terms);
            }
            ax -= 1;
            if k[ax] < cutoffs[ax] as i64 {
                k[ax] += 1;
                break;
            }
            k[ax] = -(cutoffs[ax] as i64);
        }
    }
}

/// Tensor evaluator for a full d-dimensional spectrum.
pub fn build_tensor_evaluator(
    spec: &SpectrumNd,
    cov: &CovarianceSpec,
    cutoffs: &[usize],
    guard: f64,
) -> Result<TensorEvaluator> {
    let d = spec.dim();
    check_tensor_shape(d, cov, cutoffs)?;
    for (k, m) in cutoffs.iter().zip(spec.sizes()) {
        if *k > m / 2 {
            return Err(Error::OutOfRange {
                what: "cutoff K",
                value: *k,
                max: m / 2,
            });
        }
    }
    let omegas: Vec<f64> = spec
        .domains()
        .iter()
        .map(|(a, b)| 2.0 * PI / (b - a))
        .collect();
    let terms = enumerate_tensor(cutoffs, &omegas, cov, guard, |k| spec.coefficient(k))?;
    Ok(TensorEvaluator {
        origin: spec.domains().iter().map(|(a, _)| *a).collect(),
        terms,
    })
}

/// Tensor evaluator for `beta prod_j h_j(x_j)` given one spectrum per axis;
/// the multi-dimensional coefficient is the product of the axis coefficients.
pub fn build_tensor_evaluator_from_axes(
    axes: &[Spectrum1D],
    beta: f64,
    cov: &CovarianceSpec,
    cutoffs: &[usize],
    guard: f64,
) -> Result<TensorEvaluator> {
    let d = axes.len();
    check_tensor_shape(d, cov, cutoffs)?;
    for (k, s) in cutoffs.iter().zip(axes) {
        if *k as i64 > s.half() {
            return Err(Error::OutOfRange {
                what: "cutoff K",
                value: *k,
                max: s.half() as usize,
            });
        }
    }
    let omegas: Vec<f64> = axes.iter().map(|s| s.base_frequency()).collect();
    let axis_coeff = |s: &Spectrum1D, k: i64| {
        let half = s.half();
        if k.abs() == half {
            s.coefficient(half) * 0.5
        } else {
            s.coefficient(k)
        }
    };
    let terms = enumerate_tensor(cutoffs, &omegas, cov, guard, |k| {
        k.iter()
            .zip(axes)
            .fold(Complex64::new(beta, 0.0), |acc, (kj, s)| {
                acc * axis_coeff(s, *kj)
            })
    })?;
    Ok(TensorEvaluator {
        origin: axes.iter().map(|s| s.domain().0).collect(),
        terms,
    })
}
