use fourier_debias::linalg::SymMatrix;
use fourier_debias::model::{cutoff_level, cutoff_level_from, draw_batch, draw_observation};
use fourier_debias::{CovarianceSpec, SequenceModelConfig, ShiftModel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_spd(n: usize, seed: u64) -> SymMatrix {
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
    let a: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>();
        }
        m[i * n + i] += 0.05;
    }
    SymMatrix::from_row_major(n, m).unwrap()
}

fn eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    DMatrix::from_row_slice(n, n, m.as_slice())
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

#[test]
fn operator_norm_simple_forms() {
    assert_eq!(
        CovarianceSpec::scalar_identity(1.0, 5)
            .unwrap()
            .operator_norm()
            .unwrap(),
        1.0
    );
    assert_eq!(
        CovarianceSpec::diagonal(vec![2.0, 1.0, 1.0])
            .unwrap()
            .operator_norm()
            .unwrap(),
        2.0
    );
}

#[test]
fn dense_operator_norm_and_rank_match_eigensolver() {
    for seed in 0..5 {
        let m = random_spd(6, seed);
        let eig = eigenvalues(&m);
        let top = eig.iter().copied().fold(f64::MIN, f64::max);
        let sum: f64 = eig.iter().sum();
        let cov = CovarianceSpec::dense(m).unwrap();
        let norm = cov.operator_norm().unwrap();
        assert!(
            (norm - top).abs() <= 1e-9 * top,
            "seed {seed}: {norm} vs {top}"
        );
        let rank = cov.effective_rank().unwrap();
        assert!((rank - sum / top).abs() <= 1e-9 * rank);
    }
}

#[test]
fn effective_rank_examples() {
    let r = CovarianceSpec::scalar_identity(1e-4, 100)
        .unwrap()
        .effective_rank()
        .unwrap();
    assert!((r - 100.0).abs() < 1e-12);
    let r = CovarianceSpec::diagonal(vec![1.0, 0.5, 0.5])
        .unwrap()
        .effective_rank()
        .unwrap();
    assert!((r - 2.0).abs() < 1e-15);
}

#[test]
fn dense_validation() {
    assert!(SymMatrix::from_row_major(2, vec![1.0, 0.3, 0.2, 1.0]).is_err());
    let indefinite = SymMatrix::from_row_major(2, vec![1.0, 3.0, 3.0, 1.0]).unwrap();
    assert!(CovarianceSpec::dense(indefinite).is_err());
}

#[test]
fn cutoff_examples() {
    assert_eq!(cutoff_level_from(1e-4, 100.0).level, 3);
    assert_eq!(cutoff_level_from(1e-4, 1.0).level, 6);
    let c = cutoff_level_from(0.25, 1.0);
    assert_eq!(c.level, 0);
    assert!(!c.noise_too_large);
    let c = cutoff_level_from(1.0, 2.0);
    assert_eq!(c.level, 0);
    assert!(c.noise_too_large);
    let cov = CovarianceSpec::scalar_identity(1e-4, 100).unwrap();
    assert_eq!(cutoff_level(&cov).unwrap().level, 3);
}

proptest! {
    #[test]
    fn cutoff_is_monotone(e1 in -12.0f64..0.0, e2 in -12.0f64..0.0, d1 in 1usize..5000, d2 in 1usize..5000) {
        let (v_lo, v_hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (r_lo, r_hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let at = |e: f64, d: usize| {
            cutoff_level(&CovarianceSpec::scalar_identity(10f64.powf(e), d).unwrap()).unwrap().level
        };
        prop_assert!(at(v_lo, r_lo) >= at(v_hi, r_lo));
        prop_assert!(at(v_lo, r_lo) >= at(v_lo, r_hi));
    }

    #[test]
    fn effective_rank_bounds(v in proptest::collection::vec(1e-3f64..10.0, 1..20)) {
        let d = v.len() as f64;
        let all_equal = v.iter().all(|x| *x == v[0]);
        let r = CovarianceSpec::diagonal(v).unwrap().effective_rank().unwrap();
        prop_assert!(r >= 1.0 - 1e-12 && r <= d + 1e-12);
        if all_equal {
            prop_assert!((r - d).abs() < 1e-9);
        } else {
            prop_assert!(r < d);
        }
    }
}

#[test]
fn degenerate_noise_returns_theta() {
    let theta = vec![0.3, -1.2, 4.0];
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
fn observation_moments_dense() {
    let s = SymMatrix::from_rows(&[
        vec![2.0, 0.6, -0.3],
        vec![0.6, 1.0, 0.2],
        vec![-0.3, 0.2, 0.5],
    ])
    .unwrap();
    let theta = vec![1.0, -2.0, 0.5];
    let m = ShiftModel::new(theta.clone(), CovarianceSpec::dense(s.clone()).unwrap()).unwrap();
    let sampler = m.sampler().unwrap();
    let mut rng = fourier_debias::rng::seeded(17);
    let draws: Vec<Vec<f64>> = (0..100_000).map(|_| sampler.draw(&mut rng)).collect();
    let t = draws.len() as f64;
    let mean: Vec<f64> = (0..3)
        .map(|i| draws.iter().map(|x| x[i]).sum::<f64>() / t)
        .collect();
    for i in 0..3 {
        let se = (s.get(i, i) / t).sqrt();
        assert!((mean[i] - theta[i]).abs() < 4.0 * se);
    }
    for i in 0..3 {
        for j in 0..3 {
            let prods: Vec<f64> = draws
                .iter()
                .map(|x| (x[i] - theta[i]) * (x[j] - theta[j]))
                .collect();
            let c = prods.iter().sum::<f64>() / t;
            // Var(z_i z_j) = S_ii S_jj + S_ij^2 for Gaussian z
            let se = ((s.get(i, i) * s.get(j, j) + s.get(i, j).powi(2)) / t).sqrt();
            assert!(
                (c - s.get(i, j)).abs() < 4.0 * se,
                "({i},{j}) {c} vs {}",
                s.get(i, j)
            );
        }
    }
}

#[test]
fn batch_determinism_and_mean_law() {
    let base = CovarianceSpec::diagonal(vec![1.0, 4.0]).unwrap();
    let cfg = SequenceModelConfig::new(vec![0.2, 0.7], base, 50).unwrap();
    assert_eq!(draw_batch(&cfg, 5).unwrap(), draw_batch(&cfg, 5).unwrap());
    assert_ne!(draw_batch(&cfg, 5).unwrap(), draw_batch(&cfg, 6).unwrap());

    let trials = 4000;
    let means: Vec<Vec<f64>> = (0..trials)
        .map(|s| draw_batch(&cfg, 1000 + s).unwrap().mean().to_vec())
        .collect();
    for (i, v0) in [1.0, 4.0].iter().enumerate() {
        let target = v0 / 50.0;
        let mu = cfg.theta()[i];
        let var = means.iter().map(|m| (m[i] - mu).powi(2)).sum::<f64>() / trials as f64;
        // variance estimate of a Gaussian: se = target * sqrt(2 / T)
        assert!((var - target).abs() < 4.0 * target * (2.0 / trials as f64).sqrt());
    }
    assert!(SequenceModelConfig::new(
        vec![0.0],
        CovarianceSpec::scalar_identity(1.0, 1).unwrap(),
        1
    )
    .is_err());
}

#[test]
fn two_observation_zero_noise_batch() {
    let cfg = SequenceModelConfig::new(
        vec![0.4, 0.6],
        CovarianceSpec::scalar_identity(1e-30, 2).unwrap(),
        2,
    )
    .unwrap();
    let b = draw_batch(&cfg, 3).unwrap();
    assert!((b.mean()[0] - 0.4).abs() < 1e-12 && (b.mean()[1] - 0.6).abs() < 1e-12);
}
