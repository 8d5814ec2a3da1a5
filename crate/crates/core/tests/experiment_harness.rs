use std::f64::consts::PI;

use fourier_debias::estimator::TruncatedSpectrum;
use fourier_debias::experiments::{
    bayes_risk_lower_bound, normal_check, run_adaptive_diff, run_sweep, BatchMode,
    LowerBoundConfig, NormalizerPolicy, Sequential, SimulationConfig, ThetaMode, TrialExecutor,
};
use fourier_debias::{
    BaseFunction, CovarianceSpec, Error, ProductFunction, ShiftModel, TruncationChoice,
};

/// Runs trials in reverse order, to check results do not depend on scheduling.
struct Reversed;

impl TrialExecutor for Reversed {
    fn map_trials<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<(usize, T)> = (0..count).rev().map(|i| (i, f(i))).collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, t)| t).collect()
    }
}

fn small_config() -> SimulationConfig {
    let mut cfg = SimulationConfig::new(BaseFunction::Power { exponent: 2.75 });
    cfg.alphas = vec![0.4, 0.5];
    cfg.trials = 200;
    cfg
}

#[test]
fn single_trial_rows_are_reproducible() {
    let mut cfg = small_config();
    cfg.trials = 1;
    cfg.adaptive = true;
    let a = run_sweep(&cfg, &Sequential).unwrap();
    let b = run_sweep(&cfg, &Sequential).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(a[0].d, 40);
    assert!((a[0].threshold - 1.0 / 0.6).abs() < 1e-15);
}

#[test]
fn schedule_order_does_not_change_statistics() {
    let mut cfg = small_config();
    cfg.adaptive = true;
    let a = run_sweep(&cfg, &Sequential).unwrap();
    let b = run_sweep(&cfg, &Reversed).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn mse_is_bias_squared_plus_variance() {
    let mut cfg = small_config();
    cfg.adaptive = true;
    for row in run_sweep(&cfg, &Sequential).unwrap() {
        let t = row.trials as f64;
        for s in [row.plugin, row.tf, row.adaptive.unwrap()] {
            let recon = s.bias * s.bias + s.variance * (t - 1.0) / t;
            let se =
                (s.mse_se.powi(2) + s.variance_se.powi(2) + (2.0 * s.bias * s.bias_se).powi(2))
                    .sqrt();
            assert!((s.mse - recon).abs() <= 3.0 * se + 1e-15);
        }
    }
}

#[test]
fn white_box_hook_collapses_differences() {
    let mut cfg = small_config();
    cfg.oracle_adaptive = true;
    for batch_mode in [BatchMode::SufficientStatistics, BatchMode::Full] {
        cfg.batch_mode = batch_mode;
        cfg.trials = if batch_mode == BatchMode::Full {
            3
        } else {
            200
        };
        for row in run_adaptive_diff(&cfg, &Sequential).unwrap() {
            assert_eq!(row.diff.mean, 0.0);
            assert_eq!(row.diff.variance, 0.0);
            assert_eq!(row.diff.abs_p99, 0.0);
        }
    }
}

#[test]
fn pinned_normalizer_fixes_the_target() {
    let mut cfg = small_config();
    cfg.trials = 50;
    cfg.theta_mode = ThetaMode::Fixed;
    let rows = run_sweep(&cfg, &Sequential).unwrap();
    // with theta fixed, plug-in errors spread around the same target 0.1
    assert!(rows.iter().all(|r| r.plugin.variance > 0.0));
    cfg.normalizer = NormalizerPolicy::MeanUnderThetaLaw;
    assert!(run_sweep(&cfg, &Sequential).is_ok());
}

#[test]
fn overflow_surfaces_with_row_context() {
    let mut cfg = small_config();
    cfg.n = 20;
    cfg.cutoff_k = 200;
    let err = run_sweep(&cfg, &Sequential).unwrap_err();
    let Error::InRow {
        alpha, cutoff_k, ..
    } = &err
    else {
        panic!("{err:?}")
    };
    assert_eq!((*alpha, *cutoff_k), (0.4, 200));
    assert!(matches!(err.root(), Error::OverflowGuard { .. }));
}

#[test]
fn invalid_configurations() {
    let mut cfg = small_config();
    cfg.alphas = vec![1.0];
    assert!(run_sweep(&cfg, &Sequential).is_err());
    let mut cfg = small_config();
    cfg.cutoff_k = 600;
    assert!(matches!(
        run_sweep(&cfg, &Sequential),
        Err(Error::OutOfRange { .. })
    ));
    let mut cfg = small_config();
    cfg.trials = 0;
    assert!(run_sweep(&cfg, &Sequential).is_err());
}

#[test]
fn bayes_ratio_small_runs() {
    for d in [1, 3] {
        let r = bayes_risk_lower_bound(
            &LowerBoundConfig {
                d,
                sigma: 0.01,
                trials: 5000,
                seed: 9,
                smoothness: 2.0,
            },
            &Sequential,
        )
        .unwrap();
        assert!(r.ratio <= 0.75f64.powi(d as i32) + 3.0 * r.mc_se);
        assert!(r.ratio >= 1.0 / (1u64 << d) as f64 - 1e-12 && r.ratio <= 1.0 + 1e-12);
        assert!(r.risk_lower_bound > 0.0);
    }
    let r = bayes_risk_lower_bound(
        &LowerBoundConfig {
            d: 4,
            sigma: 1e20,
            trials: 100,
            seed: 9,
            smoothness: 2.0,
        },
        &Sequential,
    )
    .unwrap();
    assert_eq!(r.ratio, 1.0 / 16.0);
    assert_eq!(r.mc_se, 0.0);
    assert_eq!(r.epsilon, 0.125);
}

#[test]
fn normal_check_linear_and_cosine() {
    let sigma: f64 = 0.01;
    let cov = CovarianceSpec::scalar_identity(sigma * sigma, 1).unwrap();
    let model = ShiftModel::new(vec![0.3], cov).unwrap();

    let lin = ProductFunction::new(BaseFunction::Linear, 1, 1.0).unwrap();
    let rep = normal_check(&model, &lin, |x| x[0], 4000, 3, 1.0, &Sequential).unwrap();
    assert!(rep.ks <= rep.ks_critical_5pct * 1.5);
    assert!(rep.mean_standardized.abs() < 4.0 / (4000f64).sqrt());
    assert!((rep.sigma_f - sigma).abs() < 1e-15);

    let cosf = ProductFunction::new(BaseFunction::Cosine, 1, 1.0).unwrap();
    let trunc = TruncatedSpectrum::new(
        &BaseFunction::Cosine.spectrum(64).unwrap(),
        TruncationChoice::Hard(8),
    )
    .unwrap();
    let rep = normal_check(
        &model,
        &cosf,
        |x| trunc.debiased_value(x[0], sigma * sigma),
        4000,
        3,
        1.0,
        &Sequential,
    )
    .unwrap();
    assert!(rep.ks < 0.03);
    assert!((rep.sigma_f - sigma * 2.0 * PI * (0.6 * PI).sin()).abs() < 1e-15);

    let at_peak =
        ShiftModel::new(vec![0.5], CovarianceSpec::scalar_identity(1e-4, 1).unwrap()).unwrap();
    assert_eq!(
        normal_check(&at_peak, &cosf, |x| x[0], 10, 1, 1.0, &Sequential).unwrap_err(),
        Error::CriticalPoint
    );
}
