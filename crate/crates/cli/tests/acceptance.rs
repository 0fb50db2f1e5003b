//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wellcast_core::dataset::{resample_mean, trim_rampup, FieldDataset, Phase, RateSeries, WellRecord, WellRole};
use wellcast_core::decline::{arps_rate, fit_arps, ArpsParams};
use wellcast_core::estimators::{
    fit_lasso, fit_ols, fit_ridge, mlp_loss_and_grad, train_on_dataset, Activation, EstimatorSpec, MlpModel,
};
use wellcast_core::forecaster::{backtest, rolling_origins, run_rolling_evaluation, RollingConfig, TrainingPolicy};
use wellcast_core::grid::{grid_search, EstimatorFamily, GridAxis, GridSpec};
use wellcast_core::metrics::compute_metrics;
use wellcast_core::synth::{generate_field, InjectionChange, InjectorKind, SynthInjector, SynthProducer, SynthSpec};
use wellcast_core::windowing::{build_supervised, Scope, WindowConfig};

fn d0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn reshape_example() {
    let wells = (0..3)
        .map(|w| {
            let base = 10.0 + 120.0 * w as f64;
            let oil: Vec<f64> = (0..10).map(|t| base + 10.0 * t as f64).collect();
            let mut series = BTreeMap::new();
            series.insert(Phase::Oil, RateSeries::new(d0(), 1, oil).unwrap());
            WellRecord::new(format!("P{}", w + 1), WellRole::Producer, series).unwrap()
        })
        .collect();
    let ds = FieldDataset::new(wells).unwrap();
    let ss = build_supervised(&ds, &WindowConfig::new(3, 3, Scope::PerWell).unwrap()).unwrap();
    assert_eq!(ss.n_rows(), 5);
    let x: Vec<f64> = ss.x.row(0).iter().copied().collect();
    let y: Vec<f64> = ss.y.row(0).iter().copied().collect();
    assert_eq!(x, [10., 20., 30., 130., 140., 150., 250., 260., 270.]);
    assert_eq!(y, [40., 50., 60., 160., 170., 180., 280., 290., 300.]);
    assert_eq!(ss.origins[0], ds.date_at(3));
}

fn field(n_prod: usize, n_inj: usize, n_steps: usize) -> FieldDataset {
    let mut wells = Vec::new();
    for p in 0..n_prod {
        let v = |s: f64| (0..n_steps).map(|t| s + (p * 7 + t) as f64).collect::<Vec<_>>();
        wells.push(WellRecord::producer(format!("P{p}"), d0(), 1, v(100.0), v(5e4), v(20.0)).unwrap());
    }
    for j in 0..n_inj {
        let phase = if j % 2 == 0 { Phase::WaterInj } else { Phase::GasInj };
        let v = (0..n_steps).map(|t| 50.0 + (j + t) as f64).collect();
        wells.push(WellRecord::injector(format!("I{j}"), d0(), 1, vec![(phase, v)]).unwrap());
    }
    FieldDataset::new(wells).unwrap()
}

fn dimension_law() {
    let ss = build_supervised(&field(6, 7, 40), &WindowConfig::new(15, 1, Scope::PerWell).unwrap()).unwrap();
    assert_eq!((ss.n_inputs(), ss.n_outputs()), (375, 18));
    let mut runner = TestRunner::new(PropConfig { cases: 100, failure_persistence: None, ..PropConfig::default() });
    runner
        .run(&(1usize..20, 1usize..5, 1usize..8, 0usize..9), |(i, k, np, ni)| {
            let ds = field(np, ni, i + k + 3);
            let ss = build_supervised(&ds, &WindowConfig::new(i, k, Scope::PerWell).unwrap()).unwrap();
            prop_assert_eq!(ss.n_inputs(), i * (3 * np + ni));
            prop_assert_eq!(ss.n_outputs(), 3 * np * k);
            prop_assert_eq!(ss.n_rows(), 4);
            Ok(())
        })
        .unwrap();
}

fn col(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

fn regression_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (n, p, m) = (rng.random_range(10..60), rng.random_range(1..6), rng.random_range(1..3));
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-3.0..3.0));
        let y = DMatrix::from_fn(n, m, |_, _| rng.random_range(-5.0..5.0));
        let a = fit_ols(&x, &y).unwrap();
        let b = fit_ridge(&x, &y, 0.0).unwrap();
        assert!(!a.info.rank_deficient);
        let scale = a.weights.abs().max().max(a.intercepts.abs().max());
        assert!((&a.weights - &b.weights).abs().max() <= 1e-8 * scale);
        assert!((&a.intercepts - &b.intercepts).abs().max() <= 1e-8 * scale);
    }

    let x = col(&[-1.0, 0.0, 1.0]);
    let y = col(&[-1.0, 0.0, 1.0]);
    for alpha in [0.0, 0.5, 1.0, 2.0, 3.0, 3.9, 4.0, 6.0, 50.0] {
        let r = fit_ridge(&x, &y, alpha).unwrap().weights[(0, 0)];
        assert!((r - 2.0 / (2.0 + alpha)).abs() < 1e-6, "ridge alpha {alpha}: {r}");
        let l = fit_lasso(&x, &y, alpha, 1e-12, 1000).unwrap().weights[(0, 0)];
        let expect = (1.0 - alpha / 4.0).max(0.0);
        assert!((l - expect).abs() < 1e-6, "lasso alpha {alpha}: {l}");
        if alpha >= 4.0 {
            assert_eq!(l, 0.0);
        }
    }

    // Orthogonal design, so each coefficient is a pure soft-threshold.
    let n = 16;
    let x = DMatrix::from_fn(n, 4, |r, c| if (r >> c) & 1 == 0 { 1.0 } else { -1.0 });
    let w = [3.0, -1.5, 0.6, 0.1];
    let y = DMatrix::from_fn(n, 1, |r, _| (0..4).map(|c| x[(r, c)] * w[c]).sum::<f64>() + 0.01 * (r as f64).sin());
    let alphas: Vec<f64> = (0..10).map(|k| 12.0 * k as f64).collect();
    let (mut last_zeros, mut last_l1, mut last_l2) = (0, f64::INFINITY, f64::INFINITY);
    for &a in &alphas {
        let l = fit_lasso(&x, &y, a, 1e-12, 10_000).unwrap();
        let zeros = l.weights.iter().filter(|v| **v == 0.0).count();
        let l1 = l.weights.abs().sum();
        assert!(zeros >= last_zeros && l1 <= last_l1 + 1e-9);
        let r = fit_ridge(&x, &y, a).unwrap();
        let l2 = r.weights.norm();
        assert!(l2 <= last_l2 + 1e-12);
        (last_zeros, last_l1, last_l2) = (zeros, l1, l2);
    }
    assert_eq!(last_zeros, 4);
}

fn mlp_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for act in [Activation::Identity, Activation::Relu, Activation::Tanh] {
        for _ in 0..5 {
            let mut m = MlpModel::init(3, 5, 2, act, &mut rng);
            m.b_hidden.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            m.b_out.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            let x = DMatrix::from_fn(8, 3, |_, _| rng.random_range(-2.0..2.0));
            let y = DMatrix::from_fn(8, 2, |_, _| rng.random_range(-2.0..2.0));
            let (_, g) = mlp_loss_and_grad(&m, &x, &y).unwrap();
            let loss = |m: &MlpModel| mlp_loss_and_grad(m, &x, &y).unwrap().0;
            let mut check = |analytic: f64, get: &dyn Fn(&mut MlpModel) -> &mut f64| {
                let mut p = m.clone();
                *get(&mut p) += h;
                let up = loss(&p);
                *get(&mut p) -= 2.0 * h;
                let down = loss(&p);
                let numeric = (up - down) / (2.0 * h);
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(err);
            };
            for r in 0..3 {
                for c in 0..5 {
                    check(g.w_in[(r, c)], &|p| &mut p.w_in[(r, c)]);
                }
            }
            for r in 0..5 {
                check(g.b_hidden[r], &|p| &mut p.b_hidden[r]);
                for c in 0..2 {
                    check(g.w_out[(r, c)], &|p| &mut p.w_out[(r, c)]);
                }
            }
            for c in 0..2 {
                check(g.b_out[c], &|p| &mut p.b_out[c]);
            }
        }
    }
    assert!(worst < 1e-4, "max relative gradient error {worst:e}");
}

/// Exponential declines and one gain and lag per producer, so field totals
/// obey an exact linear recurrence in the lag window.
fn linear_field_spec(seed: u64, n_steps: usize) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let producers = (0..6)
        .map(|p| SynthProducer {
            id: format!("P{}", p + 1),
            q_i: rng.random_range(500.0..1500.0),
            d_i: 0.0004 * (p + 1) as f64,
            b: 0.0,
            open_step: 0,
            gor: rng.random_range(100.0..250.0),
            water_cut_max: rng.random_range(0.2..0.8),
            water_cut_rate: 0.0,
            water_cut_mid: 0.0,
        })
        .collect();
    let injectors = (0..7)
        .map(|j| {
            let kind = if j < 4 { InjectorKind::Water } else { InjectorKind::Gas };
            let program = (0..n_steps)
                .step_by(8)
                .map(|step| {
                    let level = rng.random_range(0.3..1.0);
                    InjectionChange {
                        step,
                        water: if kind == InjectorKind::Water { 2000.0 * level } else { 0.0 },
                        gas: if kind == InjectorKind::Gas { 3e5 * level } else { 0.0 },
                    }
                })
                .collect();
            SynthInjector {
                id: format!("I{}", j + 1),
                kind,
                program,
            }
        })
        .collect();
    let gains: Vec<f64> = (0..6).map(|_| rng.random_range(0.01..0.05)).collect();
    SynthSpec {
        seed,
        start_date: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        step_days: 10,
        n_steps,
        producers,
        injectors,
        gains: gains.iter().map(|g| vec![*g; 7]).collect(),
        lags: (0..6).map(|p| vec![1 + p % 5; 7]).collect(),
        gas_voidage: 0.005,
        gas_breakthrough: 0.05,
        noise: 0.0,
        saturation: None,
    }
}

fn recursive_oracle() {
    for seed in [11, 12, 13] {
        let ds = generate_field(&linear_field_spec(seed, 128)).unwrap();
        let train_steps = 1095 / 10;
        let window = WindowConfig::new(15, 1, Scope::FullField).unwrap();
        let model = train_on_dataset(&ds.slice(0, train_steps).unwrap(), &window, &EstimatorSpec::Ols, 0.0).unwrap();
        let m = backtest(&model, &ds, train_steps, 18).unwrap().metrics().unwrap();
        assert!(m.smape < 0.01, "seed {seed}: smape {}", m.smape);
    }
}

fn desk_field(seed: u64) -> FieldDataset {
    let raw = generate_field(&SynthSpec::desk_scale(seed)).unwrap();
    trim_rampup(&resample_mean(&raw, 10).unwrap(), None).unwrap()
}

fn walk_forward() {
    let ds = desk_field(5);
    let n = ds.n_steps();
    let cfg = RollingConfig {
        window: WindowConfig::new(15, 1, Scope::FullField).unwrap(),
        min_train_steps: 1095 / 10,
        cadence_steps: 365 / 10,
        horizon_steps: 18,
        policy: TrainingPolicy::Incremental,
        val_fraction: 0.0,
    };
    let report = run_rolling_evaluation(&ds, &cfg, &EstimatorSpec::Ols).unwrap();
    let expected = (n - cfg.horizon_steps - cfg.min_train_steps) / cfg.cadence_steps + 1;
    assert_eq!(report.rounds.len(), expected);
    assert_eq!(rolling_origins(n, cfg.min_train_steps, cfg.cadence_steps, 18).len(), expected);
    let mut last_rows = 0;
    for r in &report.rounds {
        assert_eq!(r.origin, cfg.min_train_steps + r.round * cfg.cadence_steps);
        // last training target sits at train_start + look_back + train_rows - 1
        let last_target = r.train_start + 15 + r.train_rows - 1;
        assert!(ds.date_at(last_target) < r.origin_date);
        assert_eq!(r.forecast.dates[0], r.origin_date);
        assert!(r.train_rows >= last_rows);
        last_rows = r.train_rows;
    }
}

fn metric_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let a: Vec<f64> = (0..1000).map(|i| if i % 97 == 0 { 0.0 } else { rng.random_range(0.0..1e3) }).collect();
    let p: Vec<f64> = (0..1000).map(|i| if i % 89 == 0 { 0.0 } else { rng.random_range(0.0..1e3) }).collect();
    let ap = compute_metrics(&a, &p).unwrap();
    let pa = compute_metrics(&p, &a).unwrap();
    assert!((ap.smape - pa.smape).abs() < 1e-12);
    assert!((0.0..=2.0).contains(&ap.smape));
    for k in 0..1000 {
        let s = compute_metrics(&a[k..=k], &p[k..=k]).unwrap().smape;
        assert!((0.0..=2.0).contains(&s));
    }
    assert!(rel(ap.rmse * ap.rmse, ap.mse) < 1e-12);
    let m = compute_metrics(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
    assert!((m.mape - 0.1).abs() < 1e-6);
    assert!((m.smape - 0.100251).abs() < 1e-6);
    assert!((m.r2 - 0.9).abs() < 1e-6);
    assert!((m.mae - 15.0).abs() < 1e-6 && (m.mse - 250.0).abs() < 1e-6);
}

fn arps_round_trip() {
    let truth = ArpsParams::new(1000.0, 0.05, 0.5).unwrap();
    let q: Vec<f64> = (0..120).map(|t| arps_rate(&truth, t as f64)).collect();
    let fit = fit_arps(&RateSeries::new(d0(), 1, q).unwrap()).unwrap().params;
    assert!(rel(fit.q_i, 1000.0) < 0.01, "q_i {}", fit.q_i);
    assert!(rel(fit.d_i, 0.05) < 0.01, "d_i {}", fit.d_i);
    assert!(rel(fit.b, 0.5) < 0.01, "b {}", fit.b);

    let d = 0.01;
    let b = 1e-3;
    let exp = ArpsParams::new(1000.0, d, b).unwrap();
    for t in 0..=100 {
        let t = t as f64;
        let hyperbolic = 1000.0 / (1.0 + b * d * t).powf(1.0 / b);
        assert!(rel(arps_rate(&exp, t), hyperbolic) < 1e-3, "t {t}");
    }
}

fn files_with_ext(dir: &Path, ext: &str) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
seed = 42
[input]
synth = true
[pipeline]
stages = ["synth", "condition", "train", "evaluate", "plot"]
[estimator]
kind = "mlp"
hidden_size = 10
activation = "tanh"
[estimator.mlp]
max_epochs = 300
learning_rate = 0.01
[rolling]
min_train_days = 2190
cadence_days = 365
"#,
    )
    .unwrap();
    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_wellcast"))
            .args(["pipeline", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
        files_with_ext(&dir.path().join(out), "csv")
    };
    let a = run("a");
    let b = run("b");
    assert!(a.contains_key("rolling.csv") && a.contains_key("synthetic.csv"));
    assert!(a.len() >= 4);
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(bytes == &b[name], "{name} differs between runs");
    }
    let svg_a = files_with_ext(&dir.path().join("a"), "svg");
    assert!(!svg_a.is_empty());
    assert_eq!(svg_a, files_with_ext(&dir.path().join("b"), "svg"));
}

fn grid_trend() {
    let raw = generate_field(&SynthSpec::desk_scale(3)).unwrap();
    let grid = GridSpec {
        sampling_days: vec![10],
        look_back: vec![15],
        estimator: vec![EstimatorFamily::Ols, EstimatorFamily::Ridge],
        alpha: vec![0.2],
        hidden_size: vec![20],
        min_train_days: vec![365, 730, 1460, 2190],
        cadence_days: vec![180],
        horizon_days: 180,
        seed: 3,
        ..GridSpec::default()
    };
    let report = grid_search(&raw, &grid).unwrap();
    assert_eq!(report.completed().count(), report.trials.len());
    let marg = report.marginal_means(GridAxis::MinTrainDays);
    let smape = |v: &str| {
        let m = marg.iter().find(|m| m.value == v).unwrap();
        m.means[&wellcast_core::metrics::Metric::Smape]
    };
    for m in &marg {
        println!("    min_train_days {:>5}: mean smape {:.5}", m.value, m.means[&wellcast_core::metrics::Metric::Smape]);
    }
    assert!(smape("2190") <= smape("365"));
}

fn main() {
    let criteria: [(&str, Duration, fn()); 10] = [
        ("worked reshape example", Duration::from_secs(1), reshape_example),
        ("input/output dimension law", Duration::from_secs(5), dimension_law),
        ("regression oracles", Duration::from_secs(10), regression_oracles),
        ("mlp gradient check", Duration::from_secs(5), mlp_gradient_check),
        ("recursive-forecast linear oracle", Duration::from_secs(30), recursive_oracle),
        ("walk-forward integrity", Duration::from_secs(60), walk_forward),
        ("metric identities", Duration::from_secs(5), metric_identities),
        ("arps round-trip", Duration::from_secs(5), arps_round_trip),
        ("end-to-end determinism", Duration::from_secs(120), end_to_end_determinism),
        ("grid-search training-window trend", Duration::from_secs(300), grid_trend),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let took = start.elapsed();
        let verdict = match (&outcome, took <= *budget) {
            (Ok(()), true) => "PASS",
            (Ok(()), false) => "FAIL (over time budget)",
            (Err(_), _) => "FAIL",
        };
        if verdict != "PASS" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {verdict} [{:.2}s of {}s]",
            k + 1,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
