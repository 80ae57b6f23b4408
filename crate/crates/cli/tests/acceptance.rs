//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria that need the UCI telemonitoring table look for it at `$NORO_DATASET` or
//! `<workspace>/data/parkinsons_updrs.data`. Without it, the dataset-specific checks
//! (feature selection, no-noise magnitude) fail, and the remaining end-to-end checks run
//! on the seeded surrogate and say so in their output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use ndarray::{Array1, Array2, Axis};
use noro_core::binning::{compute_bin_centers, fit_binning, BinAssignment, BinningModel};
use noro_core::dataset::synthetic::{generate, SurrogateConfig};
use noro_core::dataset::{feature_index, split_rows, Dataset, Target, CANONICAL_ROWS};
use noro_core::encoder::{
    contrastive_loss, distance_coefficients, forward, loss_gradient, train_encoder, TrainConfig, TrainedEncoder,
};
use noro_core::evaluation::{
    error_triple, relative_error, run_pipeline, ExperimentReport, FeatureSpace, Metric, MetricSummary,
    PipelineConfig, PreparedData, Variant,
};
use noro_core::noise::{inject, NoiseLevel};
use noro_core::regressors::ModelKind;
use noro_core::selection::{feature_report, FeatureReport, ForestParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 2024;

/// Written straight to stdout so the line shows up even when libtest captures output.
fn verdict(id: u32, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "[criterion {id:>2}] {status} {title}: {detail}").ok();
    out.flush().ok();
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn canonical_path() -> PathBuf {
    std::env::var_os("NORO_DATASET")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/parkinsons_updrs.data"))
}

struct Source {
    dataset: Dataset,
    canonical: bool,
    path: PathBuf,
}

impl Source {
    fn tag(&self) -> &'static str {
        if self.canonical {
            "[canonical]"
        } else {
            "[surrogate]"
        }
    }
}

fn source() -> &'static Source {
    static SOURCE: OnceLock<Source> = OnceLock::new();
    SOURCE.get_or_init(|| {
        let path = canonical_path();
        match Dataset::load(&path) {
            Ok(dataset) if dataset.rows() == CANONICAL_ROWS => Source {
                dataset,
                canonical: true,
                path,
            },
            _ => Source {
                dataset: generate(&SurrogateConfig::default()).expect("surrogate"),
                canonical: false,
                path,
            },
        }
    })
}

fn prepared() -> &'static PreparedData {
    static DATA: OnceLock<PreparedData> = OnceLock::new();
    DATA.get_or_init(|| {
        let ds = &source().dataset;
        PreparedData::new(ds, split_rows(ds.rows(), SEED).unwrap()).unwrap()
    })
}

fn selection() -> &'static FeatureReport {
    static REPORT: OnceLock<FeatureReport> = OnceLock::new();
    REPORT.get_or_init(|| feature_report(&source().dataset, 10, &ForestParams::default(), SEED).unwrap())
}

fn train_with_bins(k: usize) -> noro_core::Result<TrainedEncoder> {
    let data = prepared();
    let feature = selection().selected_index;
    let pool = data.x.select(Axis(0), &data.pool_rows);
    let binning = fit_binning(feature, pool.column(feature), k)?;
    let config = TrainConfig { k, seed: SEED, ..TrainConfig::default() };
    train_encoder(data.x.view(), &data.folds, &binning, &config)
}

fn encoder() -> &'static TrainedEncoder {
    static ENCODER: OnceLock<TrainedEncoder> = OnceLock::new();
    ENCODER.get_or_init(|| train_with_bins(5).unwrap())
}

/// GPR and bagged trees at 10 dB over 10 trials, Motor UPDRS.
fn robustness_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let enc = encoder();
        let config = PipelineConfig {
            targets: vec![Target::Motor],
            models: vec![ModelKind::Gpr, ModelKind::Bagged],
            snr_levels: vec![NoiseLevel::Snr(10.0)],
            trials: 10,
            base_seed: SEED,
            cluster_quality: false,
            pca: false,
            ..PipelineConfig::default()
        };
        run_pipeline(prepared(), &enc.weights, &enc.binning, &config).unwrap().report
    })
}

#[test]
fn criterion_01_alpha_matrix() {
    let mut problems = Vec::new();
    for k in 1..=50 {
        let a = distance_coefficients(k);
        for i in 0..k {
            if a[[i, i]] != 1.0 {
                problems.push(format!("K={k} diag {i} = {}", a[[i, i]]));
            }
            for j in 0..k {
                if !(a[[i, j]] > 0.0) {
                    problems.push(format!("K={k} α[{i}][{j}] not positive"));
                }
            }
            for j in 0..k {
                for l in 0..k {
                    let (dj, dl) = (j.abs_diff(i), l.abs_diff(i));
                    if dj < dl && a[[i, l]] > a[[i, j]] {
                        problems.push(format!("K={k} row {i}: α at distance {dl} exceeds distance {dj}"));
                    }
                }
            }
        }
    }
    let a5 = distance_coefficients(5);
    let spots = (a5[[0, 1]], a5[[2, 4]]);
    let pass = problems.is_empty() && spots == (0.8, 0.3);
    let detail = format!(
        "K=1..50 checked, α(5;1,2)={} α(5;3,5)={}{}",
        spots.0,
        spots.1,
        problems.first().map(|p| format!("; first problem: {p}")).unwrap_or_default()
    );
    verdict(1, "distance coefficients", pass, &detail);
}

/// Direct transcription of the loss: −Σ_j log(exp(h_j·c_b) / Σ_k exp(α_bk h_j·c_k)).
fn naive_loss(h: &Array2<f64>, centers: &Array2<f64>, bins: &[usize], alpha: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for (j, &b) in bins.iter().enumerate() {
        let dot = |k: usize| (0..h.ncols()).map(|c| h[[j, c]] * centers[[k, c]]).sum::<f64>();
        let denom: f64 = (0..centers.nrows()).map(|k| (alpha[[b - 1, k]] * dot(k)).exp()).sum();
        total -= (dot(b - 1).exp() / denom).ln();
    }
    total
}

#[test]
fn criterion_02_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(2..=6);
        let dp = rng.random_range(2..=6);
        let k = rng.random_range(2..=4);
        let m = rng.random_range(k..=30);
        let x = Array2::from_shape_fn((m, d), |_| rng.random_range(-1.5..1.5));
        let w = Array2::from_shape_fn((d, dp), |_| rng.random_range(-0.8..0.8));
        let bins: Vec<usize> = (0..m).map(|i| if i < k { i + 1 } else { rng.random_range(1..=k) }).collect();
        let assignment = BinAssignment { bins: bins.clone() };
        let alpha = distance_coefficients(k);
        let analytic = loss_gradient(w.view(), x.view(), &assignment, alpha.view()).unwrap();
        let centers = analytic.centers.clone();
        let lib = contrastive_loss(forward(w.view(), x.view()).unwrap().view(), centers.view(), &assignment, alpha.view())
            .unwrap();
        let h0 = x.dot(&w).mapv(f64::tanh);
        assert!((lib - naive_loss(&h0, &centers, &bins, &alpha)).abs() < 1e-9 * (1.0 + lib.abs()));
        let step = 1e-5;
        let mut numeric = Array2::<f64>::zeros(w.dim());
        for idx in 0..w.len() {
            let (r, c) = (idx / dp, idx % dp);
            let mut plus = w.clone();
            plus[[r, c]] += step;
            let mut minus = w.clone();
            minus[[r, c]] -= step;
            let lp = naive_loss(&x.dot(&plus).mapv(f64::tanh), &centers, &bins, &alpha);
            let lm = naive_loss(&x.dot(&minus).mapv(f64::tanh), &centers, &bins, &alpha);
            numeric[[r, c]] = (lp - lm) / (2.0 * step);
        }
        let diff = (&analytic.gradient - &numeric).mapv(|v| v * v).sum().sqrt();
        let scale = analytic.gradient.mapv(|v| v * v).sum().sqrt().max(numeric.mapv(|v| v * v).sum().sqrt());
        worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
    }
    verdict(2, "contrastive gradient vs central differences", worst < 1e-4, &format!("20 instances, worst relative error {worst:.3e}"));
}

#[test]
fn criterion_03_noise_calibration() {
    let src = source();
    let x = &prepared().x;
    let mut worst: f64 = 0.0;
    for snr in [5.0, 10.0, 20.0, 30.0] {
        let noisy = inject(x.view(), NoiseLevel::Snr(snr), SEED).unwrap();
        let noise = &noisy - x;
        for j in 0..x.ncols() {
            let signal = x.column(j).mapv(|v| v * v).mean().unwrap();
            let power = noise.column(j).mapv(|v| v * v).mean().unwrap();
            worst = worst.max((10.0 * (signal / power).log10() - snr).abs());
        }
    }
    let detail = format!("{} M={} worst deviation {worst:.3} dB over 16 features x 4 levels", src.tag(), x.nrows());
    verdict(3, "SNR calibration", worst <= 0.5, &detail);
}

#[test]
fn criterion_04_binning_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for k in [2, 5, 25, 50] {
        let lo = rng.random_range(-3.0..0.0);
        let hi = lo + rng.random_range(0.5..4.0);
        let column = Array1::from(vec![lo, hi]);
        let model: BinningModel = fit_binning(0, column.view(), k).unwrap();
        let width = (hi - lo) / k as f64;
        let edges: Vec<f64> = (1..k).map(|i| lo + i as f64 * width).collect();
        for n in 0..10_000 {
            let v = if n % 10 == 0 {
                edges.get(n / 10 % edges.len().max(1)).copied().unwrap_or(lo)
            } else {
                rng.random_range(lo - 0.5..hi + 0.5)
            };
            let expected = if v >= hi {
                k
            } else {
                1 + edges.iter().filter(|&&e| v >= e).count()
            };
            if model.assign_bin(v) != expected {
                mismatches += 1;
            }
        }
    }
    // K=5 with only bins 1 and 4 occupied; K=3 with bins 1 and 3 (equidistant case).
    let h = ndarray::array![[1.0, 0.0], [3.0, 0.0], [0.0, 1.0]];
    let c = compute_bin_centers(h.view(), &BinAssignment { bins: vec![1, 1, 4] }, 5).unwrap();
    let expected = ndarray::array![[2.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]];
    let h3 = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
    let c3 = compute_bin_centers(h3.view(), &BinAssignment { bins: vec![1, 3] }, 3).unwrap();
    let expected3 = ndarray::array![[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]];
    let pass = mismatches == 0 && c == expected && c3 == expected3;
    let detail = format!("{mismatches} mismatches in 4x10^4 values; fallback centers {}", if c == expected && c3 == expected3 { "match" } else { "differ" });
    verdict(4, "bin assignment and empty-bin centers", pass, &detail);
}

#[test]
fn criterion_05_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let yh: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = error_triple(Array1::from(y.clone()).view(), Array1::from(yh.clone()).view()).unwrap();
        let mut abs = Vec::new();
        let (mut se, mut ae) = (0.0, 0.0);
        for i in 0..n {
            let e = y[i] - yh[i];
            se += e * e;
            ae += e.abs();
            abs.push(e.abs());
        }
        abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if n % 2 == 1 { abs[n / 2] } else { (abs[n / 2 - 1] + abs[n / 2]) / 2.0 };
        for (a, b) in [(got.rmse, (se / n as f64).sqrt()), (got.mae, ae / n as f64), (got.median_ae, med)] {
            worst = worst.max((a - b).abs());
        }
    }
    let mut worst_ratio: f64 = 0.0;
    for (cv, ratio) in [(0.02, 0.9), (0.05, 0.75), (0.1, 0.8)] {
        let spread: Normal<f64> = Normal::new(0.0, cv).unwrap();
        let draws: Vec<f64> = (0..10_000)
            .map(|_| (ratio * spread.sample(&mut rng).exp()) / spread.sample(&mut rng).exp())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let empirical = (draws.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
        let est = relative_error(MetricSummary { mean: 1.0, std: cv }, MetricSummary { mean: ratio, std: ratio * cv }).unwrap();
        worst_ratio = worst_ratio.max((est.sigma_hat - empirical).abs() / empirical);
    }
    let pass = worst <= 1e-12 && worst_ratio < 0.3;
    let detail = format!("metric max abs diff {worst:.1e} over 10^3 vectors; propagated σ within {:.1}% of Monte Carlo", 100.0 * worst_ratio);
    verdict(5, "metric and propagation oracles", pass, &detail);
}

#[test]
fn criterion_06_feature_selection() {
    let src = source();
    if !src.canonical {
        verdict(6, "DFA selected on the canonical data", false, &format!("canonical dataset not found at {}", src.path.display()));
        return;
    }
    let report = selection();
    let dfa = feature_index("DFA").unwrap();
    let motor_top = report.ranking(Target::Motor)[0];
    let total_top = report.ranking(Target::Total)[0];
    let pass = motor_top == dfa && total_top == dfa;
    let detail = format!(
        "top feature motor={} total={} selected={}",
        report.feature_names[motor_top], report.feature_names[total_top], report.selected_name
    );
    verdict(6, "DFA selected on the canonical data", pass, &detail);
}

#[test]
fn criterion_07_no_noise_magnitude() {
    let src = source();
    if !src.canonical {
        verdict(7, "bagged-trees clean Motor RMSE in [0.70, 1.00]", false, &format!("canonical dataset not found at {}", src.path.display()));
        return;
    }
    let enc = encoder();
    let config = PipelineConfig {
        targets: vec![Target::Motor],
        models: vec![ModelKind::Bagged],
        snr_levels: vec![NoiseLevel::None],
        trials: 1,
        cluster_quality: false,
        ..PipelineConfig::default()
    };
    let report = run_pipeline(prepared(), &enc.weights, &enc.binning, &config).unwrap().report;
    let rmse = report.cell(Target::Motor, ModelKind::Bagged, NoiseLevel::None, Variant::Baseline).unwrap().rmse.mean;
    verdict(7, "bagged-trees clean Motor RMSE in [0.70, 1.00]", (0.70..=1.00).contains(&rmse), &format!("RMSE {rmse:.4}"));
}

#[test]
fn criterion_08_gpr_robustness() {
    let report = robustness_report();
    let snr = NoiseLevel::Snr(10.0);
    let rel = report.relative_entry(Target::Motor, ModelKind::Gpr, snr, Metric::Rmse).unwrap();
    let base = report.cell(Target::Motor, ModelKind::Gpr, snr, Variant::Baseline).unwrap().rmse;
    let noro = report.cell(Target::Motor, ModelKind::Gpr, snr, Variant::Noro).unwrap().rmse;
    let pass = noro.mean < base.mean && rel.delta_hat <= -0.10 && rel.significant;
    let detail = format!(
        "{} RMSE {:.4}±{:.4} -> {:.4}±{:.4}, δ̂={:+.4} σ̂={:.4}, p={}",
        source().tag(),
        base.mean,
        base.std,
        noro.mean,
        noro.std,
        rel.delta_hat,
        rel.sigma_hat,
        rel.p.map(|p| format!("{p:.3e}")).unwrap_or_else(|| "n/a".into())
    );
    verdict(8, "GPR at 10 dB: δ̂ ≤ −0.10 and significant", pass, &detail);
}

#[test]
fn criterion_09_ensemble_robustness() {
    let report = robustness_report();
    let snr = NoiseLevel::Snr(10.0);
    let gpr = report.relative_entry(Target::Motor, ModelKind::Gpr, snr, Metric::Rmse).unwrap().delta_hat;
    let bag = report.relative_entry(Target::Motor, ModelKind::Bagged, snr, Metric::Rmse).unwrap().delta_hat;
    let detail = format!("{} |δ̂| bagged={:.4} gpr={:.4}", source().tag(), bag.abs(), gpr.abs());
    verdict(9, "bagged |δ̂| below GPR |δ̂| at 10 dB", bag.abs() < gpr.abs(), &detail);
}

#[test]
fn criterion_10_feature_space() {
    let enc = encoder();
    let config = PipelineConfig {
        targets: vec![Target::Motor],
        models: vec![ModelKind::Ridge],
        snr_levels: vec![NoiseLevel::Snr(30.0)],
        trials: 1,
        folds: Some(1),
        cluster_quality: true,
        pca: false,
        ..PipelineConfig::default()
    };
    let report = run_pipeline(prepared(), &enc.weights, &enc.binning, &config).unwrap().report;
    let ch = |space, snr| report.cluster(space, snr).unwrap().ch;
    let (oc, on) = (ch(FeatureSpace::Original, NoiseLevel::None), ch(FeatureSpace::Original, NoiseLevel::Snr(30.0)));
    let (ac, an) = (ch(FeatureSpace::Augmented, NoiseLevel::None), ch(FeatureSpace::Augmented, NoiseLevel::Snr(30.0)));
    let pass = an > on && (ac - an) < (oc - on);
    let detail = format!(
        "{} CH original {oc:.1}->{on:.1} (drop {:.1}), augmented {ac:.1}->{an:.1} (drop {:.1})",
        source().tag(),
        oc - on,
        ac - an
    );
    verdict(10, "augmented CH higher and drops less at 30 dB", pass, &detail);
}

#[test]
fn criterion_11_bin_sweep() {
    let data = prepared();
    let mut rows = vec!["k,model,metric,delta_hat,sigma_hat,significant".to_string()];
    let mut failures = Vec::new();
    for k in [5, 10, 15, 20, 25, 30] {
        let trained = match train_with_bins(k) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("K={k}: {e}"));
                continue;
            }
        };
        if !trained.validation_loss.is_finite() || trained.log.iter().any(|e| !e.train_loss.is_finite()) {
            failures.push(format!("K={k}: non-finite loss"));
            continue;
        }
        let config = PipelineConfig {
            targets: vec![Target::Motor],
            models: vec![ModelKind::Neural, ModelKind::Gpr],
            snr_levels: vec![NoiseLevel::Snr(10.0)],
            trials: 2,
            folds: Some(3),
            cluster_quality: false,
            pca: false,
            ..PipelineConfig::default()
        };
        match run_pipeline(data, &trained.weights, &trained.binning, &config) {
            Ok(out) => {
                for r in &out.report.relative {
                    if !r.delta_hat.is_finite() || !r.sigma_hat.is_finite() {
                        failures.push(format!("K={k}: non-finite relative error for {}", r.model));
                    }
                    rows.push(format!("{k},{},{},{},{},{}", r.model, r.metric, r.delta_hat, r.sigma_hat, r.significant));
                }
            }
            Err(e) => failures.push(format!("K={k}: {e}")),
        }
    }
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("bin_sweep.csv");
    std::fs::write(&path, rows.join("\n") + "\n").unwrap();
    let detail = format!(
        "{} 6 bin counts, {} curve points -> {}{}",
        source().tag(),
        rows.len() - 1,
        path.display(),
        failures.first().map(|f| format!("; {f}")).unwrap_or_default()
    );
    verdict(11, "bin-count sweep trains and reports", failures.is_empty() && rows.len() == 1 + 6 * 2 * 3, &detail);
}

#[test]
fn criterion_12_determinism() {
    let src = source();
    let dir = tempfile::tempdir().unwrap();
    let data_path = if src.canonical {
        src.path.clone()
    } else {
        let p = dir.path().join("surrogate.csv");
        let mut buf = Vec::new();
        src.dataset.write_csv(&mut buf).unwrap();
        std::fs::write(&p, buf).unwrap();
        p
    };
    let out = dir.path().join("out");
    let run = || {
        let status = Command::new(env!("CARGO_BIN_EXE_noro"))
            .args(["evaluate", "--train-first", "--feature", "DFA", "--models", "ridge,knn,neural", "--snr", "10,30"])
            .args(["--trials", "2", "--folds", "2", "--data"])
            .arg(&data_path)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("spawn noro");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        (std::fs::read(out.join("report.json")).unwrap(), std::fs::read(out.join("encoder.json")).unwrap())
    };
    let first = run();
    let second = run();
    let pass = first == second;
    let detail = format!("{} report {} bytes, encoder {} bytes, identical: {pass}", src.tag(), first.0.len(), first.1.len());
    verdict(12, "repeated evaluate is byte-identical", pass, &detail);
}
