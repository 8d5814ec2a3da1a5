//! Monte Carlo harness: bias/variance/MSE sweeps over `d = n^alpha`, the
//! paired adaptive-difference study, the normal-approximation check and the
//! Bayes-risk ratio behind the minimax lower bound.
//!
//! Every trial draws from its own generator seeded by `(seed, row, trial)`
//! and statistics are reduced with pairwise summation in trial order, so the
//! output does not depend on how a [`TrialExecutor`] schedules the work.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::adaptive::{
    adaptive_from_moments, AdaptiveConfig, AdaptiveOverride, CovarianceForm, MomentAccumulator,
};
use crate::error::{Error, Result};
use crate::estimator::DEFAULT_OVERFLOW_GUARD;
use crate::estimator::{
    scaled_product, BaseFunction, ProductFunction, TruncatedSpectrum, TruncationChoice,
};
use crate::model::{cutoff_level_from, ShiftModel};
use crate::rng;
use crate::spectral::Spectrum1D;

/// Runs independent trials, possibly in parallel. Results come back in trial order.
pub trait TrialExecutor {
    fn map_trials<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialExecutor for Sequential {
    fn map_trials<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Summary of per-trial signed errors `e_t = estimate_t - f(theta_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    /// `|mean|`.
    pub bias: f64,
    /// Sample variance (denominator `T - 1`; zero for a single trial).
    pub variance: f64,
    /// `mean(e^2)`.
    pub mse: f64,
    pub bias_se: f64,
    pub variance_se: f64,
    pub mse_se: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Self {
        let t = errors.len() as f64;
        let mean = pairwise_mean(errors);
        let centered2: Vec<f64> = errors.iter().map(|e| (e - mean) * (e - mean)).collect();
        let ss = pairwise_sum(&centered2);
        let variance = if errors.len() > 1 {
            ss / (t - 1.0)
        } else {
            0.0
        };
        let pop_var = ss / t;
        let centered4: Vec<f64> = centered2.iter().map(|c| c * c).collect();
        let m4 = pairwise_mean(&centered4);
        let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let mse = pairwise_mean(&squares);
        let sq_dev: Vec<f64> = squares.iter().map(|s| (s - mse) * (s - mse)).collect();
        Self {
            mean,
            bias: mean.abs(),
            variance,
            mse,
            bias_se: libm::sqrt(pop_var / t),
            variance_se: libm::sqrt((m4 - pop_var * pop_var).max(0.0) / t),
            mse_se: libm::sqrt(pairwise_mean(&sq_dev) / t),
        }
    }
}

/// Uniform box law for `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaLaw {
    pub low: f64,
    pub high: f64,
}

impl Default for ThetaLaw {
    fn default() -> Self {
        Self {
            low: 0.4,
            high: 0.6,
        }
    }
}

impl ThetaLaw {
    fn validate(&self) -> Result<()> {
        if !(self.low < self.high) || !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::Invalid("theta law needs finite low < high".into()));
        }
        Ok(())
    }

    fn draw_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.low + (self.high - self.low) * rng.gen::<f64>();
        }
    }
}

/// How `beta` in `f = beta prod h(theta_j)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizerPolicy {
    /// Per trial, `beta = c / prod h(theta_j)`, so `f(theta) = c` for every `d`.
    Pinned(f64),
    /// `beta = (E h(U))^{-d}` under the theta law, so `E f(theta) = 1`.
    MeanUnderThetaLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// Redraw `theta` every trial.
    Fresh,
    /// One draw per alpha row.
    Fixed,
}

/// How observations are generated when the adaptive estimator is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Stream `n` genuine observations through the moment accumulator.
    Full,
    /// Draw `xbar_j ~ N(theta_j, 1/n)` and `(n-1) s_jj ~ chi^2_{n-1}`
    /// independently: the exact joint law of what the separable adaptive
    /// estimator reads from a Gaussian batch with `Sigma_0 = I`.
    SufficientStatistics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Sample size; `sigma^2 = 1/n`.
    pub n: usize,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub base: BaseFunction,
    /// Nominal smoothness for the reference lines.
    pub smoothness: f64,
    /// Per-axis index cutoff `K`.
    pub cutoff_k: usize,
    /// Grid size `M` for the base spectrum.
    pub grid_m: usize,
    pub theta_law: ThetaLaw,
    pub theta_mode: ThetaMode,
    pub normalizer: NormalizerPolicy,
    pub seed: u64,
    pub adaptive: bool,
    pub batch_mode: BatchMode,
    /// White-box hook: feed the true covariance and level to the adaptive path.
    pub oracle_adaptive: bool,
    pub guard: f64,
}

impl SimulationConfig {
    /// Defaults for a base function: `n = 10^4`, alpha grid 0.40..0.85,
    /// 2000 trials, `K = 80`, `M = 1024`.
    pub fn new(base: BaseFunction) -> Self {
        let smoothness = match base {
            BaseFunction::Power { exponent } => exponent,
            _ => 2.0,
        };
        Self {
            n: 10_000,
            alphas: default_alpha_grid(),
            trials: 2000,
            base,
            smoothness,
            cutoff_k: 80,
            grid_m: 1024,
            theta_law: ThetaLaw::default(),
            theta_mode: ThetaMode::Fresh,
            normalizer: NormalizerPolicy::Pinned(0.1),
            seed: 20_240_601,
            adaptive: false,
            batch_mode: BatchMode::SufficientStatistics,
            oracle_adaptive: false,
            guard: DEFAULT_OVERFLOW_GUARD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewObservations(self.n));
        }
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Invalid("alpha grid is empty".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Invalid(alloc::format!(
                "alpha = {a} is outside (0, 1)"
            )));
        }
        if self.grid_m < 2 || !self.grid_m.is_multiple_of(2) {
            return Err(Error::Invalid(
                "grid size M must be even and at least 2".into(),
            ));
        }
        if self.cutoff_k > self.grid_m / 2 {
            return Err(Error::OutOfRange {
                what: "cutoff K",
                value: self.cutoff_k,
                max: self.grid_m / 2,
            });
        }
        if let NormalizerPolicy::Pinned(c) = self.normalizer {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Invalid("pinned value of f must be positive".into()));
            }
        }
        self.theta_law.validate()
    }
}

/// `0.40, 0.45, ..., 0.85`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..10).map(|i| (40 + 5 * i) as f64 / 100.0).collect()
}

/// `d = round(n^alpha)`.
pub fn dimension_for_alpha(n: usize, alpha: f64) -> usize {
    libm::round(libm::pow(n as f64, alpha)) as usize
}

/// `1 / (1 - alpha)`.
pub fn smoothness_threshold(alpha: f64) -> f64 {
    1.0 / (1.0 - alpha)
}

/// Reference magnitudes drawn as dashed lines next to the measured curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLines {
    /// `(d/n)^{s/2}`
    pub half_power: f64,
    /// `(d/n)^s`
    pub full_power: f64,
    /// `n^{-1/2}`
    pub root_n: f64,
    /// `n^{-1}`
    pub inv_n: f64,
}

pub fn reference_lines(n: usize, d: usize, smoothness: f64) -> ReferenceLines {
    let ratio = d as f64 / n as f64;
    ReferenceLines {
        half_power: libm::pow(ratio, smoothness / 2.0),
        full_power: libm::pow(ratio, smoothness),
        root_n: 1.0 / libm::sqrt(n as f64),
        inv_n: 1.0 / n as f64,
    }
}

/// Paired difference `g(xbar) - g_hat(xbar)` over trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    /// Empirical 99th percentile of `|g - g_hat|`.
    pub abs_p99: f64,
}

impl DiffStats {
    pub fn from_diffs(diffs: &[f64]) -> Self {
        let s = ErrorStats::from_errors(diffs);
        let mut abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let idx = (libm::ceil(0.99 * abs.len() as f64) as usize).clamp(1, abs.len()) - 1;
        Self {
            mean: s.mean,
            variance: s.variance,
            mean_se: s.bias_se,
            abs_p99: abs[idx],
        }
    }
}

/// One alpha row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRow {
    pub alpha: f64,
    pub d: usize,
    pub threshold: f64,
    /// Cutoff level `N` of the known covariance (diagnostic).
    pub cutoff_level: u32,
    pub trials: usize,
    pub plugin: ErrorStats,
    pub tf: ErrorStats,
    pub adaptive: Option<ErrorStats>,
    pub adaptive_diff: Option<DiffStats>,
    /// Mean adaptive per-axis cutoff over trials.
    pub mean_k_hat: Option<f64>,
    pub reference: ReferenceLines,
}

struct TrialOutcome {
    f_theta: f64,
    plugin: f64,
    tf: f64,
    adaptive: Option<(f64, usize)>,
}

struct RowContext<'a> {
    cfg: &'a SimulationConfig,
    row: usize,
    d: usize,
    sigma2: f64,
    spectrum: &'a Spectrum1D,
    trunc: TruncatedSpectrum,
    adaptive: Option<AdaptiveConfig>,
    fixed_theta: Option<Vec<f64>>,
    fixed_log_beta: Option<f64>,
    chi: Option<ChiSquared<f64>>,
}

impl RowContext<'_> {
    fn run_trial(&self, trial: usize) -> Result<TrialOutcome> {
        let cfg = self.cfg;
        let d = self.d;
        let mut rng = rng::trial_rng(cfg.seed, self.row as u64, trial as u64);
        let theta = match &self.fixed_theta {
            Some(t) => t.clone(),
            None => {
                let mut t = vec![0.0; d];
                cfg.theta_law.draw_into(&mut rng, &mut t);
                t
            }
        };
        let (log_beta, f_theta) = self.normalize(&theta)?;

        let sd = libm::sqrt(self.sigma2);
        let mut sigma0_diag = None;
        let xbar = if self.adaptive.is_some() && cfg.batch_mode == BatchMode::Full {
            let mut acc = MomentAccumulator::new(d, CovarianceForm::Diagonal);
            let mut obs = vec![0.0; d];
            for _ in 0..cfg.n {
                for (o, t) in obs.iter_mut().zip(&theta) {
                    *o = t + rng.sample::<f64, _>(StandardNormal);
                }
                acc.push(&obs);
            }
            let cov = acc.covariance()?;
            sigma0_diag = Some((0..d).map(|j| cov.diagonal(j)).collect::<Vec<f64>>());
            acc.mean().to_vec()
        } else {
            let x: Vec<f64> = theta
                .iter()
                .map(|t| t + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if let Some(chi) = &self.chi {
                let dof = (cfg.n - 1) as f64;
                sigma0_diag = Some((0..d).map(|_| chi.sample(&mut rng) / dof).collect());
            }
            x
        };

        let plugin = scaled_product(log_beta, xbar.iter().map(|x| cfg.base.value(*x)));
        let tf = self
            .trunc
            .debiased_product(log_beta, &xbar, |_| self.sigma2);
        let adaptive = match (&self.adaptive, sigma0_diag) {
            (Some(acfg), Some(diag)) => {
                let out =
                    adaptive_from_moments(&xbar, &diag, cfg.n, self.spectrum, log_beta, acfg)?;
                let k = match out.truncation {
                    TruncationChoice::Hard(k) => k,
                    TruncationChoice::Dyadic { .. } => 0,
                };
                Some((out.value, k))
            }
            _ => None,
        };
        Ok(TrialOutcome {
            f_theta,
            plugin,
            tf,
            adaptive,
        })
    }

    /// `(ln beta, f(theta))`.
    fn normalize(&self, theta: &[f64]) -> Result<(f64, f64)> {
        if let Some(lb) = self.fixed_log_beta {
            return Ok((
                lb,
                scaled_product(lb, theta.iter().map(|t| self.cfg.base.value(*t))),
            ));
        }
        let NormalizerPolicy::Pinned(c) = self.cfg.normalizer else {
            unreachable!("mean-under-law normalizer is fixed per row")
        };
        let mut sign = 1.0;
        let mut log_abs = 0.0;
        for t in theta {
            let h = self.cfg.base.value(*t);
            if h == 0.0 || !h.is_finite() {
                return Err(Error::Invalid(
                    "pinned normalizer needs h(theta_j) nonzero".into(),
                ));
            }
            if h < 0.0 {
                sign = -sign;
            }
            log_abs += libm::log(h.abs());
        }
        Ok((libm::log(c) - log_abs, sign * c))
    }
}

/// Bias/variance/MSE of plug-in, known-covariance and (optionally) adaptive
/// estimators for every alpha in the grid.
pub fn run_sweep<E: TrialExecutor + ?Sized>(
    cfg: &SimulationConfig,
    exec: &E,
) -> Result<Vec<SimulationRow>> {
    cfg.validate()?;
    let spectrum = cfg.base.spectrum(cfg.grid_m)?;
    let mut rows = Vec::with_capacity(cfg.alphas.len());
    for (row, &alpha) in cfg.alphas.iter().enumerate() {
        let wrap = |e: Error| Error::InRow {
            alpha,
            cutoff_k: cfg.cutoff_k,
            source: Box::new(e),
        };
        rows.push(run_row(cfg, row, alpha, &spectrum, exec).map_err(wrap)?);
    }
    Ok(rows)
}

fn run_row<E: TrialExecutor + ?Sized>(
    cfg: &SimulationConfig,
    row: usize,
    alpha: f64,
    spectrum: &Spectrum1D,
    exec: &E,
) -> Result<SimulationRow> {
    let d = dimension_for_alpha(cfg.n, alpha).max(1);
    let sigma2 = 1.0 / cfg.n as f64;
    // Sigma = I_d / n: operator norm 1/n, effective rank d
    let level = cutoff_level_from(sigma2, d as f64);
    let trunc = TruncatedSpectrum::new(spectrum, TruncationChoice::Hard(cfg.cutoff_k))?;
    trunc.check_guard(sigma2, cfg.guard)?;

    let adaptive = cfg.adaptive.then(|| {
        let mut a = AdaptiveConfig::hard(cfg.cutoff_k, level.raw.max(0.0));
        a.guard = cfg.guard;
        if cfg.oracle_adaptive {
            a.overrides = Some(AdaptiveOverride {
                noise_variances: vec![sigma2; d],
                n_hat: level.raw.max(0.0),
            });
        }
        a
    });
    let chi = match (cfg.adaptive, cfg.batch_mode) {
        (true, BatchMode::SufficientStatistics) => Some(
            ChiSquared::new((cfg.n - 1) as f64)
                .map_err(|_| Error::Invalid("chi-squared degrees".into()))?,
        ),
        _ => None,
    };
    let fixed_theta = (cfg.theta_mode == ThetaMode::Fixed).then(|| {
        let mut rng = rng::trial_rng(cfg.seed, row as u64, u64::MAX);
        let mut t = vec![0.0; d];
        cfg.theta_law.draw_into(&mut rng, &mut t);
        t
    });
    let fixed_log_beta = match cfg.normalizer {
        NormalizerPolicy::MeanUnderThetaLaw => {
            Some(normalizer_log_beta(&cfg.base, d, cfg.theta_law)?)
        }
        NormalizerPolicy::Pinned(_) => None,
    };
    let ctx = RowContext {
        cfg,
        row,
        d,
        sigma2,
        spectrum,
        trunc,
        adaptive,
        fixed_theta,
        fixed_log_beta,
        chi,
    };
    let outcomes = exec.map_trials(cfg.trials, |t| ctx.run_trial(t));
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let errors = |pick: &dyn Fn(&TrialOutcome) -> f64| -> Vec<f64> {
        outcomes.iter().map(|o| pick(o) - o.f_theta).collect()
    };
    let plugin = ErrorStats::from_errors(&errors(&|o| o.plugin));
    let tf = ErrorStats::from_errors(&errors(&|o| o.tf));
    let (adaptive, adaptive_diff, mean_k_hat) = if cfg.adaptive {
        let adapt_err: Vec<f64> = outcomes
            .iter()
            .map(|o| o.adaptive.map_or(f64::NAN, |a| a.0) - o.f_theta)
            .collect();
        let diffs: Vec<f64> = outcomes
            .iter()
            .map(|o| o.tf - o.adaptive.map_or(f64::NAN, |a| a.0))
            .collect();
        let ks: Vec<f64> = outcomes
            .iter()
            .map(|o| o.adaptive.map_or(f64::NAN, |a| a.1 as f64))
            .collect();
        (
            Some(ErrorStats::from_errors(&adapt_err)),
            Some(DiffStats::from_diffs(&diffs)),
            Some(pairwise_mean(&ks)),
        )
    } else {
        (None, None, None)
    };
    Ok(SimulationRow {
        alpha,
        d,
        threshold: smoothness_threshold(alpha),
        cutoff_level: level.level,
        trials: cfg.trials,
        plugin,
        tf,
        adaptive,
        adaptive_diff,
        mean_k_hat,
        reference: reference_lines(cfg.n, d, cfg.smoothness),
    })
}

/// Per-alpha paired difference `g(xbar) - g_hat(xbar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveDiffRow {
    pub alpha: f64,
    pub d: usize,
    pub trials: usize,
    pub diff: DiffStats,
}

/// Paired known-versus-estimated covariance study. Forces the adaptive path on.
pub fn run_adaptive_diff<E: TrialExecutor + ?Sized>(
    cfg: &SimulationConfig,
    exec: &E,
) -> Result<Vec<AdaptiveDiffRow>> {
    let mut cfg = cfg.clone();
    cfg.adaptive = true;
    Ok(run_sweep(&cfg, exec)?
        .into_iter()
        .map(|r| AdaptiveDiffRow {
            alpha: r.alpha,
            d: r.d,
            trials: r.trials,
            diff: r.adaptive_diff.expect("adaptive enabled"),
        })
        .collect())
}

/// `E h(U)` for `U` uniform on the theta law, by adaptive Simpson quadrature.
pub fn mean_under_law(base: &BaseFunction, law: ThetaLaw) -> Result<f64> {
    law.validate()?;
    let integral = adaptive_simpson(&|x| base.value(x), law.low, law.high, 1e-12, 50);
    Ok(integral / (law.high - law.low))
}

/// `ln beta = -d ln E h(U)`.
pub fn normalizer_log_beta(base: &BaseFunction, d: usize, law: ThetaLaw) -> Result<f64> {
    if d == 0 {
        return Ok(0.0);
    }
    let m = mean_under_law(base, law)?;
    if !(m > 0.0) {
        return Err(Error::NonPositiveMean(m));
    }
    Ok(-(d as f64) * libm::log(m))
}

/// `beta = (E h(U))^{-d}`, so that `E f(theta) = 1` under independent coordinates.
pub fn normalizer_beta(base: &BaseFunction, d: usize, law: ThetaLaw) -> Result<f64> {
    Ok(libm::exp(normalizer_log_beta(base, d, law)?))
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    simpson_step(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `Phi(z)`.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// Two-sided Kolmogorov-Smirnov distance between the sample and `N(0, 1)`.
pub fn ks_distance_normal(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let t = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, z)| {
            let p = standard_normal_cdf(*z);
            ((i + 1) as f64 / t - p).max(p - i as f64 / t)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 5% critical value of the one-sample KS statistic.
pub fn ks_critical_5pct(trials: usize) -> f64 {
    1.358 / libm::sqrt(trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCheckReport {
    pub ks: f64,
    pub ks_critical_5pct: f64,
    pub sigma_f: f64,
    pub trials: usize,
    pub mean_standardized: f64,
    /// `E^{1/2}(g - f)^2 / sigma_f`.
    pub rmse_ratio: f64,
    /// `||Sigma||^{1/2} B / sigma_f` with `B` a nominal smoothness-norm value.
    pub k_diagnostic: f64,
}

/// Standardizes `(estimate(x) - f(theta)) / sigma_f(theta)` over `trials`
/// draws of `x = theta + xi` and compares with `N(0, 1)`.
pub fn normal_check<E, G>(
    model: &ShiftModel,
    f: &ProductFunction,
    estimate: G,
    trials: usize,
    seed: u64,
    besov_norm: f64,
    exec: &E,
) -> Result<NormalCheckReport>
where
    E: TrialExecutor + ?Sized,
    G: Fn(&[f64]) -> f64 + Sync + Send,
{
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: f.dim(),
        });
    }
    let theta = model.theta();
    let sigma_f = crate::estimator::sensitivity_sigma(f, theta, model.covariance())?;
    let f_theta = f.value(theta);
    let noise = libm::sqrt(model.covariance().operator_norm()?);
    // gradients at the round-off level (e.g. sin(pi)) count as critical
    if !(sigma_f > 1e-12 * noise * f_theta.abs().max(1.0)) {
        return Err(Error::CriticalPoint);
    }
    let sampler = model.sampler()?;
    let z: Vec<f64> = exec.map_trials(trials, |t| {
        let mut rng = rng::trial_rng(seed, 0, t as u64);
        (estimate(&sampler.draw(&mut rng)) - f_theta) / sigma_f
    });
    let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
    Ok(NormalCheckReport {
        ks: ks_distance_normal(&z),
        ks_critical_5pct: ks_critical_5pct(trials),
        sigma_f,
        trials,
        mean_standardized: pairwise_mean(&z),
        rmse_ratio: libm::sqrt(pairwise_mean(&sq)),
        k_diagnostic: noise * besov_norm / sigma_f,
    })
}

/// `max(16 / ln 1.5, sqrt(32 / ln 1.5))`.
pub fn lower_bound_beta() -> f64 {
    let l = libm::log(1.5);
    (16.0 / l).max(libm::sqrt(32.0 / l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundConfig {
    pub d: usize,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    /// Smoothness `s` in the risk factor `d eps^{2s}`.
    pub smoothness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    pub epsilon: f64,
    pub points: usize,
    pub ratio: f64,
    pub mc_se: f64,
    /// `(3/4)^d`.
    pub reference: f64,
    /// `d eps^{2s} (1 - ratio)`.
    pub risk_lower_bound: f64,
}

/// Largest dimension for which `2^d` densities are evaluated per draw.
pub const LOWER_BOUND_MAX_DIM: usize = 10;

/// Monte Carlo estimate of `E sum_i phi_i^2 / (sum_i phi_i)^2` over the
/// hypercube prior `theta_i = 8 eps v_i / sqrt(d)`, `v_i in {-1, 1}^d`,
/// with `eps = min(sigma sqrt(d) / beta, 1/8)`.
pub fn bayes_risk_lower_bound<E: TrialExecutor + ?Sized>(
    cfg: &LowerBoundConfig,
    exec: &E,
) -> Result<LowerBoundReport> {
    let d = cfg.d;
    if d == 0 || d > LOWER_BOUND_MAX_DIM {
        return Err(Error::OutOfRange {
            what: "lower-bound dimension d",
            value: d,
            max: LOWER_BOUND_MAX_DIM,
        });
    }
    if !(cfg.sigma > 0.0) || !cfg.sigma.is_finite() {
        return Err(Error::Invalid("sigma must be positive and finite".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let sqrt_d = libm::sqrt(d as f64);
    let eps = (cfg.sigma * sqrt_d / lower_bound_beta()).min(0.125);
    let m = 1usize << d;
    let amp = 8.0 * eps / sqrt_d;
    let points: Vec<f64> = (0..m)
        .flat_map(|i| (0..d).map(move |j| if (i >> j) & 1 == 1 { amp } else { -amp }))
        .collect();
    let inv_two_var = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let ratios: Vec<f64> = exec.map_trials(cfg.trials, |t| {
        let mut rng = rng::trial_rng(cfg.seed, 0, t as u64);
        let i = rng.gen_range(0..m);
        let x: Vec<f64> = points[i * d..(i + 1) * d]
            .iter()
            .map(|c| c + cfg.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let logs: Vec<f64> = points
            .chunks_exact(d)
            .map(|p| {
                -p.iter()
                    .zip(&x)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    * inv_two_var
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s1, mut s2) = (0.0, 0.0);
        for l in &logs {
            let w = libm::exp(l - top);
            s1 += w;
            s2 += w * w;
        }
        s2 / (s1 * s1)
    });
    let stats = ErrorStats::from_errors(&ratios);
    let ratio = stats.mean;
    Ok(LowerBoundReport {
        epsilon: eps,
        points: m,
        ratio,
        mc_se: stats.bias_se,
        reference: libm::pow(0.75, d as f64),
        risk_lower_bound: d as f64 * libm::pow(eps, 2.0 * cfg.smoothness) * (1.0 - ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_thresholds() {
        assert_eq!(dimension_for_alpha(10_000, 0.40), 40);
        assert_eq!(dimension_for_alpha(10_000, 0.75), 1000);
        assert_eq!(dimension_for_alpha(10_000, 0.85), 2512);
        assert!((smoothness_threshold(0.4) - 1.6667).abs() < 1e-4);
    }

    #[test]
    fn reference_values() {
        let r = reference_lines(10_000, 100, 2.75);
        assert!((r.half_power / libm::pow(10.0, -2.75) - 1.0).abs() < 1e-12);
        assert_eq!(r.root_n, 0.01);
        assert_eq!(reference_lines(10, 10, 2.0).full_power, 1.0);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn mse_decomposes() {
        let e = [0.1, -0.3, 0.25, 0.05, 0.4];
        let s = ErrorStats::from_errors(&e);
        let t = e.len() as f64;
        assert!((s.mse - (s.bias * s.bias + s.variance * (t - 1.0) / t)).abs() < 1e-15);
    }

    #[test]
    fn normalizer_for_constant_and_power() {
        let law = ThetaLaw::default();
        assert_eq!(
            normalizer_beta(&BaseFunction::Constant(1.0), 7, law).unwrap(),
            1.0
        );
        assert_eq!(
            normalizer_beta(&BaseFunction::Power { exponent: 2.75 }, 0, law).unwrap(),
            1.0
        );
        let s: f64 = 2.75;
        let prim = |x: f64| libm::pow(2.0 * x, s + 1.0) / (2.0 * (s + 1.0));
        let m = (prim(0.6) - prim(0.4)) / 0.2;
        let got = mean_under_law(&BaseFunction::Power { exponent: s }, law).unwrap();
        assert!((got - m).abs() < 1e-10);
        assert!(matches!(
            normalizer_beta(&BaseFunction::Constant(-1.0), 3, law),
            Err(Error::NonPositiveMean(_))
        ));
    }

    #[test]
    fn lower_bound_rejects_large_d() {
        let cfg = LowerBoundConfig {
            d: 11,
            sigma: 0.1,
            trials: 10,
            seed: 1,
            smoothness: 2.0,
        };
        assert!(bayes_risk_lower_bound(&cfg, &Sequential).is_err());
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // midpoints of 1000 equal-probability cells
        let z: Vec<f64> = (0..1000)
            .map(|i| {
                let p = (i as f64 + 0.5) / 1000.0;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if standard_normal_cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        assert!((ks_distance_normal(&z) - 0.0005).abs() < 1e-9);
    }
}
