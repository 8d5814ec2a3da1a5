//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fourier_debias::estimator::{eval_product, plug_in, sensitivity_sigma, DEFAULT_OVERFLOW_GUARD};
use fourier_debias::experiments::{
    bayes_risk_lower_bound, normal_check, run_adaptive_diff, run_sweep, AdaptiveDiffRow,
    LowerBoundConfig, SimulationConfig, ThetaLaw, ThetaMode,
};
use fourier_debias::model::cutoff_level_from;
use fourier_debias::{
    adaptive_estimate, build_debiased_1d, AdaptiveConfig, CovarianceSpec, ProductFunction,
    ShiftModel, TruncationChoice,
};

use crate::args::{
    Cli, Command, EstimateArgs, IoArgs, LowerBoundArgs, NormalCheckArgs, SimulateArgs,
};
use crate::config::{ConfigFile, FloatList, Resolver};
use crate::error::{CliError, CliResult};
use crate::executor::RayonExecutor;
use crate::files;
use crate::manifest::RunManifest;
use crate::options::{
    BaseChoice, BatchModeArg, EstimatorArg, NormalizerArg, PathArg, TruncationArg,
};
use crate::report::{self, Field};
use crate::svg;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUT: &str = "fourier-debias-out";
/// Exit code of a completed `normal-check` whose KS distance exceeds the threshold.
pub const EXIT_CHECK_FAILED: i32 = 1;

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let exec = RayonExecutor::from_env()?;
    match cli.command {
        Command::Simulate(a) => simulate(&a, &exec, stdout),
        Command::Estimate(a) => estimate(&a, &exec, stdout),
        Command::LowerBound(a) => lower_bound(&a, &exec, stdout),
        Command::NormalCheck(a) => normal_check_cmd(&a, &exec, stdout),
    }
}

fn load_config(io: &IoArgs) -> CliResult<ConfigFile> {
    match &io.config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn out(w: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    w.write_fmt(line)
        .and_then(|_| w.write_all(b"\n"))
        .map_err(|e| CliError::io("<stdout>", e))
}

macro_rules! say {
    ($w:expr, $($arg:tt)*) => { out($w, format_args!($($arg)*))? };
}

fn write_sidecar(dir: &Path, manifest: &RunManifest, exec: &RayonExecutor) -> CliResult<()> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    report::write_artifact(
        dir,
        "run.json",
        &manifest.sidecar_json(now, exec.workers())?,
    )?;
    Ok(())
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

fn at_least_one(name: &str, v: usize) -> CliResult<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{name} must be at least 1")))
    }
}

pub fn simulate(a: &SimulateArgs, exec: &RayonExecutor, w: &mut dyn Write) -> CliResult<i32> {
    let file = load_config(&a.io)?;
    let mut r = Resolver::new(&file);
    let base_choice = r.value("base", a.base.clone(), BaseChoice::H1)?;
    let base = base_choice.load()?;
    let mut cfg = SimulationConfig::new(base);
    cfg.seed = r.value("seed", a.seed, DEFAULT_SEED)?;
    cfg.trials = at_least_one("trials", r.value("trials", a.trials, cfg.trials)?)?;
    cfg.n = r.value("n", a.n, cfg.n)?;
    cfg.cutoff_k = r.value("cutoff-k", a.cutoff_k, cfg.cutoff_k)?;
    cfg.grid_m = r.value("grid-m", a.grid_m, cfg.grid_m)?;
    cfg.alphas = r
        .value("alphas", a.alphas.clone(), FloatList(cfg.alphas.clone()))?
        .0;
    cfg.adaptive = r.switch("adaptive", a.adaptive)?;
    let adaptive_diff = r.switch("adaptive-diff", a.adaptive_diff)?;
    if r.switch("fixed-theta", a.fixed_theta)? {
        cfg.theta_mode = ThetaMode::Fixed;
    }
    let plot = r.switch("plot", a.plot)?;
    let data_only = r.switch("data-only", a.data_only)?;
    // a genuine n-observation batch unless told otherwise
    cfg.batch_mode = r
        .value(
            "batch-mode",
            a.batch_mode,
            BatchModeArg(fourier_debias::experiments::BatchMode::Full),
        )?
        .0;
    cfg.smoothness = r.value("smoothness", a.smoothness, base_choice.default_smoothness())?;
    cfg.normalizer = r
        .value("normalizer", a.normalizer, NormalizerArg(cfg.normalizer))?
        .0;
    let law = ThetaLaw::default();
    let bx = r.value(
        "theta-box",
        a.theta_box.clone(),
        FloatList(vec![law.low, law.high]),
    )?;
    if bx.0.len() != 2 {
        return Err(CliError::usage(
            "--theta-box takes exactly two values low,high",
        ));
    }
    cfg.theta_law = ThetaLaw {
        low: bx.0[0],
        high: bx.0[1],
    };
    cfg.guard = r.value("guard", a.guard, DEFAULT_OVERFLOW_GUARD)?;
    let dir = r.value("out", a.io.out.clone(), PathArg(PathBuf::from(DEFAULT_OUT)))?;
    let manifest = RunManifest::new("simulate", cfg.seed, r.into_resolved());

    let rows = run_sweep(&cfg, exec)?;
    let sweep = report::write_artifact(&dir.0, "sweep.csv", &report::sweep_csv(&manifest, &rows)?)?;
    say!(w, "wrote {}", sweep.display());
    if adaptive_diff {
        let diff_rows: Vec<AdaptiveDiffRow> = if cfg.adaptive {
            rows.iter()
                .map(|r| AdaptiveDiffRow {
                    alpha: r.alpha,
                    d: r.d,
                    trials: r.trials,
                    diff: r.adaptive_diff.expect("adaptive enabled"),
                })
                .collect()
        } else {
            run_adaptive_diff(&cfg, exec)?
        };
        let p = report::write_artifact(
            &dir.0,
            "adaptive_diff.csv",
            &report::adaptive_diff_csv(&manifest, &diff_rows)?,
        )?;
        say!(w, "wrote {}", p.display());
    }
    if plot && !data_only {
        for metric in svg::Metric::ALL {
            let chart = svg::sweep_chart(&rows, metric, &base_choice.to_string());
            let p = report::write_artifact(&dir.0, metric.file_name(), &chart.render(&manifest)?)?;
            say!(w, "wrote {}", p.display());
        }
    }
    write_sidecar(&dir.0, &manifest, exec)?;

    say!(
        w,
        "{:>6} {:>6} {:>10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "alpha",
        "d",
        "threshold",
        "plugin_bias",
        "tf_bias",
        "adapt_bias",
        "plugin_mse",
        "tf_mse",
        "adapt_mse"
    );
    for row in &rows {
        let ad = |f: fn(&fourier_debias::experiments::ErrorStats) -> f64| {
            row.adaptive
                .as_ref()
                .map_or_else(|| "-".to_string(), |s| format!("{:.4e}", f(s)))
        };
        say!(
            w,
            "{:>6.2} {:>6} {:>10.4} {:>12.4e} {:>12.4e} {:>12} {:>12.4e} {:>12.4e} {:>12}",
            row.alpha,
            row.d,
            row.threshold,
            row.plugin.bias,
            row.tf.bias,
            ad(|s| s.bias),
            row.plugin.mse,
            row.tf.mse,
            ad(|s| s.mse)
        );
    }
    Ok(0)
}

pub fn estimate(a: &EstimateArgs, exec: &RayonExecutor, w: &mut dyn Write) -> CliResult<i32> {
    let file = load_config(&a.io)?;
    let mut r = Resolver::new(&file);
    let base_choice = r.value("base", a.base.clone(), BaseChoice::H1)?;
    let x_inline = r.optional("x", a.x.clone())?;
    let x_file = r.optional("x-file", a.x_file.clone())?;
    let n = r.value("n", a.n, 10_000usize)?;
    let sigma = r.optional("sigma", a.sigma)?;
    let beta = r.value("beta", a.beta, 1.0)?;
    let theta = r.optional("theta", a.theta.clone())?;
    let cutoff_k = r.value("cutoff-k", a.cutoff_k, 80usize)?;
    let grid_m = r.value("grid-m", a.grid_m, 1024usize)?;
    let truncation = r.value("truncation", a.truncation, TruncationArg::Hard)?;
    let guard = r.value("guard", a.guard, DEFAULT_OVERFLOW_GUARD)?;
    let adaptive = r.switch("adaptive", a.adaptive)?;
    let batch_path = r.optional("batch", a.batch.clone())?;
    let seed = r.value("seed", a.seed, DEFAULT_SEED)?;
    let dir = r.optional("out", a.io.out.clone())?;

    if adaptive && batch_path.is_none() {
        return Err(CliError::usage(
            "--adaptive needs an observation batch: pass --batch <file>",
        ));
    }
    let batch = batch_path
        .as_ref()
        .map(|p| files::load_batch(&p.0))
        .transpose()?;
    let x: Vec<f64> = match (&x_inline, &x_file, &batch) {
        (Some(x), None, None) => x.0.clone(),
        (None, Some(p), None) => files::load_batch(&p.0).and_then(|b| {
            if b.len() == 1 {
                Ok(b.observation(0).to_vec())
            } else {
                Err(CliError::usage(format!(
                    "{} must hold exactly one observation, found {}",
                    p,
                    b.len()
                )))
            }
        })?,
        (None, None, Some(b)) => b.mean().to_vec(),
        (None, None, None) => {
            return Err(CliError::usage(
                "no observation: pass --x, --x-file or --batch",
            ))
        }
        _ => {
            return Err(CliError::usage(
                "give exactly one of --x, --x-file and --batch",
            ))
        }
    };
    let d = x.len();
    if let Some(t) = &theta {
        if t.0.len() != d {
            return Err(fourier_debias::Error::DimensionMismatch {
                expected: d,
                found: t.0.len(),
            }
            .into());
        }
    }
    let n_eff = batch.as_ref().map_or(n, |b| b.len());
    let sigma = positive("sigma", sigma.unwrap_or(1.0 / (n_eff as f64).sqrt()))?;
    let variance = sigma * sigma;

    let base = base_choice.load()?;
    let spectrum = base.spectrum(grid_m)?;
    let level = cutoff_level_from(variance, d as f64);
    let choice = match truncation {
        TruncationArg::Hard => TruncationChoice::Hard(cutoff_k),
        TruncationArg::Dyadic => TruncationChoice::dyadic(level.level),
    };
    let evaluator = build_debiased_1d(&spectrum, variance, choice, guard)?;
    let f = ProductFunction::new(base, d, beta)?;
    let plugin = plug_in(&f, &x);
    let tf = eval_product(&evaluator, beta, &x);
    let hessian = evaluator.hessian_bound_proxy();
    let cov = CovarianceSpec::scalar_identity(variance, d)?;
    let sens = theta
        .as_ref()
        .map(|t| sensitivity_sigma(&f, &t.0, &cov).map(|s| (f.value(&t.0), s)))
        .transpose()?;
    let adaptive_out = match (&batch, adaptive) {
        (Some(b), true) => {
            if !(beta > 0.0) {
                return Err(CliError::usage("the adaptive estimate needs --beta > 0"));
            }
            let mut cfg = AdaptiveConfig::hard(cutoff_k, level.raw.max(0.0));
            if truncation == TruncationArg::Dyadic {
                cfg.truncation = fourier_debias::adaptive::AdaptiveTruncation::Dyadic {
                    partition: Default::default(),
                };
            }
            cfg.guard = guard;
            Some(adaptive_estimate(b, &spectrum, beta.ln(), &cfg)?)
        }
        _ => None,
    };

    let mut config = r.into_resolved();
    config.insert("sigma".into(), sigma.to_string());
    let manifest = RunManifest::new("estimate", seed, config);

    say!(w, "dimension: {d}");
    say!(w, "noise_variance: {variance}");
    say!(w, "cutoff_level_N: {}", level.level);
    say!(w, "cutoff_level_raw: {}", level.raw);
    say!(w, "cutoff_k: {}", evaluator.max_index());
    say!(w, "hessian_proxy: {hessian}");
    say!(w, "plugin: {plugin}");
    say!(w, "tf: {tf}");
    if let Some(o) = &adaptive_out {
        let k_hat = match o.truncation {
            TruncationChoice::Hard(k) => k.to_string(),
            TruncationChoice::Dyadic { level, .. } => format!("dyadic level {level}"),
        };
        say!(w, "adaptive: {}", o.value);
        say!(w, "adaptive_n_hat: {}", o.n_hat);
        say!(w, "adaptive_cutoff: {k_hat}");
    }
    if let Some((f_theta, s)) = sens {
        say!(w, "f_theta: {f_theta}");
        say!(w, "sigma_f: {s}");
    }
    if let Some(dir) = dir {
        let (ad, n_hat) = adaptive_out
            .as_ref()
            .map_or((Field::Empty, Field::Empty), |o| {
                (Field::Real(o.value), Field::Real(o.n_hat))
            });
        let csv = report::record(
            &manifest,
            &[
                ("dimension", d.into()),
                ("noise_variance", variance.into()),
                ("cutoff_level", Field::Int(u64::from(level.level))),
                ("cutoff_k", evaluator.max_index().into()),
                ("hessian_proxy", hessian.into()),
                ("plugin", plugin.into()),
                ("tf", tf.into()),
                ("adaptive", ad),
                ("adaptive_n_hat", n_hat),
                ("f_theta", sens.map(|s| s.0).into()),
                ("sigma_f", sens.map(|s| s.1).into()),
            ],
        )?;
        let p = report::write_artifact(&dir.0, "estimate.csv", &csv)?;
        write_sidecar(&dir.0, &manifest, exec)?;
        say!(w, "wrote {}", p.display());
    }
    Ok(0)
}

pub fn lower_bound(a: &LowerBoundArgs, exec: &RayonExecutor, w: &mut dyn Write) -> CliResult<i32> {
    let file = load_config(&a.io)?;
    let mut r = Resolver::new(&file);
    let cfg = LowerBoundConfig {
        d: r.value("d", a.d, 1usize)?,
        sigma: r.value("sigma", a.sigma, 0.01)?,
        trials: r.value("trials", a.trials, 100_000usize)?,
        seed: r.value("seed", a.seed, DEFAULT_SEED)?,
        smoothness: r.value("smoothness", a.smoothness, 2.75)?,
    };
    let dir = r.optional("out", a.io.out.clone())?;
    let manifest = RunManifest::new("lower-bound", cfg.seed, r.into_resolved());
    let rep = bayes_risk_lower_bound(&cfg, exec)?;
    say!(w, "d: {}", cfg.d);
    say!(w, "epsilon: {}", rep.epsilon);
    say!(w, "hypotheses: {}", rep.points);
    say!(w, "ratio: {}", rep.ratio);
    say!(w, "mc_se: {}", rep.mc_se);
    say!(w, "reference_(3/4)^d: {}", rep.reference);
    say!(w, "risk_lower_bound: {}", rep.risk_lower_bound);
    if let Some(dir) = dir {
        let csv = report::record(
            &manifest,
            &[
                ("d", cfg.d.into()),
                ("sigma", cfg.sigma.into()),
                ("trials", cfg.trials.into()),
                ("epsilon", rep.epsilon.into()),
                ("hypotheses", rep.points.into()),
                ("ratio", rep.ratio.into()),
                ("mc_se", rep.mc_se.into()),
                ("reference", rep.reference.into()),
                ("risk_lower_bound", rep.risk_lower_bound.into()),
            ],
        )?;
        let p = report::write_artifact(&dir.0, "lower_bound.csv", &csv)?;
        write_sidecar(&dir.0, &manifest, exec)?;
        say!(w, "wrote {}", p.display());
    }
    Ok(0)
}

/// Nominal smoothness-norm value used in the K diagnostic.
const NOMINAL_BESOV_NORM: f64 = 1.0;

pub fn normal_check_cmd(
    a: &NormalCheckArgs,
    exec: &RayonExecutor,
    w: &mut dyn Write,
) -> CliResult<i32> {
    let file = load_config(&a.io)?;
    let mut r = Resolver::new(&file);
    let base_choice = r.value("base", a.base.clone(), BaseChoice::Cos)?;
    let theta = r.value("theta", a.theta.clone(), FloatList(vec![0.3]))?.0;
    let sigma = positive("sigma", r.value("sigma", a.sigma, 0.01)?)?;
    let beta = r.value("beta", a.beta, 1.0)?;
    let trials = at_least_one("trials", r.value("trials", a.trials, 10_000usize)?)?;
    let seed = r.value("seed", a.seed, DEFAULT_SEED)?;
    let cutoff_k = r.value("cutoff-k", a.cutoff_k, 80usize)?;
    let grid_m = r.value("grid-m", a.grid_m, 1024usize)?;
    let estimator = r.value("estimator", a.estimator, EstimatorArg::Tf)?;
    let threshold = r.value("ks-threshold", a.ks_threshold, 0.02)?;
    let guard = r.value("guard", a.guard, DEFAULT_OVERFLOW_GUARD)?;
    let dir = r.optional("out", a.io.out.clone())?;
    let manifest = RunManifest::new("normal-check", seed, r.into_resolved());

    let d = theta.len();
    let base = base_choice.load()?;
    let variance = sigma * sigma;
    let model = ShiftModel::new(theta, CovarianceSpec::scalar_identity(variance, d)?)?;
    let f = ProductFunction::new(base.clone(), d, beta)?;
    let rep = match estimator {
        EstimatorArg::Tf => {
            let ev = build_debiased_1d(
                &base.spectrum(grid_m)?,
                variance,
                TruncationChoice::Hard(cutoff_k),
                guard,
            )?;
            normal_check(
                &model,
                &f,
                |x| eval_product(&ev, beta, x),
                trials,
                seed,
                NOMINAL_BESOV_NORM,
                exec,
            )?
        }
        EstimatorArg::Plugin => normal_check(
            &model,
            &f,
            |x| plug_in(&f, x),
            trials,
            seed,
            NOMINAL_BESOV_NORM,
            exec,
        )?,
    };
    let pass = rep.ks <= threshold;
    say!(w, "estimator: {estimator}");
    say!(w, "trials: {}", rep.trials);
    say!(w, "sigma_f: {}", rep.sigma_f);
    say!(w, "mean_standardized: {}", rep.mean_standardized);
    say!(w, "rmse_ratio: {}", rep.rmse_ratio);
    say!(w, "k_diagnostic: {}", rep.k_diagnostic);
    say!(w, "ks_distance: {}", rep.ks);
    say!(w, "ks_critical_5pct: {}", rep.ks_critical_5pct);
    say!(w, "ks_threshold: {threshold}");
    say!(w, "result: {}", if pass { "PASS" } else { "FAIL" });
    if let Some(dir) = dir {
        let csv = report::record(
            &manifest,
            &[
                ("estimator", Field::Text(estimator.to_string())),
                ("trials", rep.trials.into()),
                ("sigma_f", rep.sigma_f.into()),
                ("mean_standardized", rep.mean_standardized.into()),
                ("rmse_ratio", rep.rmse_ratio.into()),
                ("k_diagnostic", rep.k_diagnostic.into()),
                ("ks_distance", rep.ks.into()),
                ("ks_critical_5pct", rep.ks_critical_5pct.into()),
                ("ks_threshold", threshold.into()),
                ("pass", Field::Text(pass.to_string())),
            ],
        )?;
        let p = report::write_artifact(&dir.0, "normal_check.csv", &csv)?;
        write_sidecar(&dir.0, &manifest, exec)?;
        say!(w, "wrote {}", p.display());
    }
    Ok(if pass { 0 } else { EXIT_CHECK_FAILED })
}
