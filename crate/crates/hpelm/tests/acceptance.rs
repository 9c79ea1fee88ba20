//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test -p hpelm --test acceptance --
//! --nocapture` to see them). Tolerances are pinned in the assertions.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hpelm::activation::{ActivationKind, LayerSpec};
use hpelm::data::{encode_and_normalize, split_stratified, synth_dataset, SynthKind};
use hpelm::featsel;
use hpelm::linalg::{pinv_oracle, solve_normal, NormalEqAccumulator};
use hpelm::metrics::{accuracy, confusion};
use hpelm::model::{fit, FitConfig};
use hpelm::{DenseMatrix, Ridge};

fn pass(name: &str, detail: &str) {
    println!("ACCEPTANCE {name}: PASS ({detail})");
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

struct Instance {
    h: DenseMatrix,
    t: DenseMatrix,
}

fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let cols = rng.random_range(2..=50);
            let rows = rng.random_range(cols.max(20)..=200);
            let m = rng.random_range(1..=3);
            Instance {
                h: random_matrix(&mut rng, rows, cols),
                t: random_matrix(&mut rng, rows, m),
            }
        })
        .collect()
}

fn solve_instance(inst: &Instance) -> DenseMatrix {
    let mut acc = NormalEqAccumulator::new(inst.h.cols(), inst.t.cols());
    acc.ingest(&inst.h, &inst.t).unwrap();
    solve_normal(&acc, Ridge::Fixed(0.0)).unwrap().beta
}

/// Solver correctness: solve_normal(ridge=0) matches the SVD pseudoinverse
/// oracle within 1e-6 entrywise on 50 random full-rank instances, < 5 s.
#[test]
fn solver_correctness() {
    let started = Instant::now();
    let instances = random_instances(50, 0xACCE);
    let mut worst: f64 = 0.0;
    for inst in &instances {
        let beta = solve_instance(inst);
        let oracle = pinv_oracle(&inst.h, &inst.t).unwrap();
        for (a, b) in beta.data().iter().zip(oracle.data()) {
            worst = worst.max((a - b).abs());
            assert!(
                (a - b).abs() < 1e-6,
                "solver vs oracle differ: {a} vs {b}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "50 instances took {elapsed:?} (budget 5 s)"
    );
    pass(
        "solver-correctness",
        &format!("50 instances, max |Δ| = {worst:.2e}, {elapsed:.2?}"),
    );
}

/// Residual minimality: no random perturbation of β with ‖Δ‖_F = 1e-3
/// reduces ‖Hβ−T‖_F by more than 1e-9.
#[test]
fn residual_minimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEE);
    let instances = random_instances(50, 0xACCE);
    for inst in &instances {
        let beta = solve_instance(inst);
        let base = inst
            .h
            .matmul(&beta)
            .unwrap()
            .sub(&inst.t)
            .unwrap()
            .frobenius_norm();
        for _ in 0..20 {
            let mut delta: Vec<f64> = (0..beta.data().len())
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
            for d in &mut delta {
                *d *= 1e-3 / norm;
            }
            let perturbed = DenseMatrix::from_vec(
                beta.rows(),
                beta.cols(),
                beta.data().iter().zip(&delta).map(|(b, d)| b + d).collect(),
            )
            .unwrap();
            let r = inst
                .h
                .matmul(&perturbed)
                .unwrap()
                .sub(&inst.t)
                .unwrap()
                .frobenius_norm();
            assert!(
                r >= base - 1e-9,
                "perturbation improved the residual: {r} < {base}"
            );
        }
    }
    pass("residual-minimality", "50 instances x 20 perturbations");
}

/// Streaming equivalence: block sizes 1, 7, 4096 reproduce the one-shot
/// HᵀH / HᵀT within 1e-10 relative (Frobenius) on 20 random instances.
#[test]
fn streaming_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57EA);
    for _ in 0..20 {
        let cols = rng.random_range(2..=30);
        let rows = rng.random_range(cols.max(10)..=150);
        let m = rng.random_range(1..=3);
        let h = random_matrix(&mut rng, rows, cols);
        let t = random_matrix(&mut rng, rows, m);
        let gram_oracle = h.transpose().matmul(&h).unwrap();
        let cross_oracle = h.transpose().matmul(&t).unwrap();
        for block in [1usize, 7, 4096] {
            let mut acc = NormalEqAccumulator::new(cols, m);
            let mut start = 0;
            while start < rows {
                let end = (start + block).min(rows);
                let idx: Vec<usize> = (start..end).collect();
                acc.ingest(&h.select_rows(&idx).unwrap(), &t.select_rows(&idx).unwrap())
                    .unwrap();
                start = end;
            }
            let gd = acc.gram().sub(&gram_oracle).unwrap().frobenius_norm();
            let cd = acc.cross().sub(&cross_oracle).unwrap().frobenius_norm();
            assert!(
                gd <= 1e-10 * gram_oracle.frobenius_norm(),
                "gram off by {gd:e} at block size {block}"
            );
            assert!(
                cd <= 1e-10 * cross_oracle.frobenius_norm(),
                "cross off by {cd:e} at block size {block}"
            );
        }
    }
    pass("streaming-equivalence", "20 instances, blocks 1/7/4096");
}

fn pipeline_split(
    kind: SynthKind,
    n: usize,
    d: usize,
    seed: u64,
    offset: f64,
) -> (DenseMatrix, Vec<String>, DenseMatrix, Vec<String>) {
    let table = synth_dataset(kind, n, d, seed, offset).unwrap();
    let split = split_stratified(&table.labels, 0.7, seed).unwrap();
    let ds = encode_and_normalize(&table, &split).unwrap();
    let tr_x = ds.x.select_rows(&split.train_indices).unwrap();
    let te_x = ds.x.select_rows(&split.test_indices).unwrap();
    let tr_y: Vec<String> = split.train_indices.iter().map(|&i| ds.labels[i].clone()).collect();
    let te_y: Vec<String> = split.test_indices.iter().map(|&i| ds.labels[i].clone()).collect();
    (tr_x, tr_y, te_x, te_y)
}

/// Interpolation regime: L = N = 30 distinct samples, ridge 0 →
/// train_residual ≤ 1e-6.
#[test]
fn interpolation_regime() {
    let (tr_x, tr_y, _, _) = pipeline_split(SynthKind::TwoGaussians, 60, 16, 7, 1.0);
    let idx: Vec<usize> = (0..30).collect();
    let x = tr_x.select_rows(&idx).unwrap();
    let y: Vec<String> = idx.iter().map(|&i| tr_y[i].clone()).collect();
    let spec = LayerSpec::single(ActivationKind::Sigmoid, 30).unwrap();
    let cfg = FitConfig {
        ridge: Ridge::Fixed(0.0),
        ..Default::default()
    };
    let model = fit(&spec, &x, &y, &cfg).unwrap();
    assert!(
        model.train_residual <= 1e-6,
        "interpolation residual {}",
        model.train_residual
    );
    pass(
        "interpolation-regime",
        &format!("residual {:.2e} at L=N=30", model.train_residual),
    );
}

/// Nested-neuron monotonicity: with ridge 0 and shared seeds the training
/// residual never increases across L in {10, 50, 100, 200}; 5 seeds,
/// tolerance 1e-9.
#[test]
fn nested_neuron_monotonicity() {
    for seed in 0..5u64 {
        let (tr_x, tr_y, _, _) = pipeline_split(SynthKind::TwoGaussians, 600, 16, 100 + seed, 1.5);
        let cfg = FitConfig {
            seed,
            ridge: Ridge::Fixed(0.0),
            ..Default::default()
        };
        let mut last = f64::INFINITY;
        for l in [10usize, 50, 100, 200] {
            let spec = LayerSpec::single(ActivationKind::Sigmoid, l).unwrap();
            let model = fit(&spec, &tr_x, &tr_y, &cfg).unwrap();
            assert!(
                model.train_residual <= last + 1e-9,
                "seed {seed}, L={l}: residual {} exceeds previous {last}",
                model.train_residual
            );
            last = model.train_residual;
        }
    }
    pass("nested-neuron-monotonicity", "L in {10,50,100,200}, 5 seeds");
}

/// Synthetic classification floor: mean test accuracy ≥ 0.95 on separable
/// Gaussians; on the XOR layout every linear-only combo ≤ 0.60 while the
/// best nonlinear combo ≥ 0.90.
#[test]
fn synthetic_classification_floor() {
    // two_gaussians(n=2000, d=6, offset 3), sigmoid(100), 10 seeds
    let mut accs = Vec::new();
    for seed in 0..10u64 {
        let (tr_x, tr_y, te_x, te_y) =
            pipeline_split(SynthKind::TwoGaussians, 2000, 6, seed, 3.0);
        let spec = LayerSpec::single(ActivationKind::Sigmoid, 100).unwrap();
        let cfg = FitConfig {
            seed,
            ..Default::default()
        };
        let model = fit(&spec, &tr_x, &tr_y, &cfg).unwrap();
        let acc = accuracy(&model.evaluate(&te_x, &te_y, None).unwrap()).unwrap();
        accs.push(acc);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!(mean >= 0.95, "mean test accuracy {mean} (accs {accs:?})");

    // XOR layout: linear-only combos fail, nonlinear combos succeed
    let (tr_x, tr_y, te_x, te_y) = pipeline_split(SynthKind::Xor, 800, 2, 42, 3.0);
    let mut linear_accs = Vec::new();
    for combo in ["linear:100", "linear:300"] {
        let spec = LayerSpec::parse(combo).unwrap();
        let model = fit(&spec, &tr_x, &tr_y, &FitConfig::default()).unwrap();
        let acc = accuracy(&model.evaluate(&te_x, &te_y, None).unwrap()).unwrap();
        assert!(acc <= 0.60, "{combo} reached {acc} on XOR");
        linear_accs.push(acc);
    }
    let mut best_nonlinear: f64 = 0.0;
    for combo in ["rbf_l2:150", "sigmoid:300", "tanh:150,rbf_l1:150"] {
        let spec = LayerSpec::parse(combo).unwrap();
        let model = fit(&spec, &tr_x, &tr_y, &FitConfig::default()).unwrap();
        let acc = accuracy(&model.evaluate(&te_x, &te_y, None).unwrap()).unwrap();
        best_nonlinear = best_nonlinear.max(acc);
    }
    assert!(best_nonlinear >= 0.90, "best nonlinear acc {best_nonlinear}");
    pass(
        "synthetic-classification-floor",
        &format!(
            "gaussian mean {mean:.4}; xor linear {:?} vs best nonlinear {best_nonlinear:.4}",
            linear_accs
        ),
    );
}

/// Feature selection: over 10 seeds the planted informative feature ranks
/// first under both methods, and the Fisher order is invariant under
/// positive per-feature rescaling.
#[test]
fn feature_selection_criteria() {
    for seed in 0..10u64 {
        let table = synth_dataset(SynthKind::PlantedFeature, 300, 8, seed, 3.0).unwrap();
        let all: Vec<usize> = (0..table.n_rows()).collect();
        let pre = hpelm::data::fit_preprocess(&table, &all).unwrap();
        let x = pre.encode(&table).unwrap();
        let signal = table
            .feature_names()
            .iter()
            .position(|n| n == "signal")
            .unwrap();
        let f = featsel::f_score(&x, &table.labels).unwrap();
        let fisher = featsel::fisher_score(&x, &table.labels).unwrap();
        assert_eq!(f.order[0], signal, "seed {seed}: f_score missed the signal");
        assert_eq!(
            fisher.order[0], signal,
            "seed {seed}: fisher missed the signal"
        );

        // positive rescaling leaves the Fisher order unchanged
        let scales: Vec<f64> = (0..x.cols()).map(|j| 0.25 + 1.75 * j as f64).collect();
        let scaled = DenseMatrix::from_vec(
            x.rows(),
            x.cols(),
            (0..x.rows())
                .flat_map(|r| {
                    let row = x.row(r).to_vec();
                    let scales = scales.clone();
                    (0..row.len()).map(move |j| row[j] * scales[j])
                })
                .collect(),
        )
        .unwrap();
        let fisher_scaled = featsel::fisher_score(&scaled, &table.labels).unwrap();
        assert_eq!(fisher.order, fisher_scaled.order, "seed {seed}");
    }
    pass("feature-selection", "10 seeds, both methods, scale invariance");
}

/// Metric identity: Eq.-(8)-style accuracy equals brute-force fraction
/// correct, exactly; the worked example gives 5/6.
#[test]
fn metric_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC);
    for _ in 0..100 {
        let n = rng.random_range(1..60);
        let t: Vec<String> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.5 { "malware" } else { "benign" }.to_string())
            .collect();
        let p: Vec<String> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.5 { "malware" } else { "benign" }.to_string())
            .collect();
        let brute = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / n as f64;
        let c = confusion(&t, &p, t.first().unwrap()).unwrap();
        assert_eq!(accuracy(&c).unwrap(), brute);
    }
    let t: Vec<String> = ["M", "M", "M", "B", "B", "B"].iter().map(|s| s.to_string()).collect();
    let p: Vec<String> = ["M", "M", "M", "B", "B", "M"].iter().map(|s| s.to_string()).collect();
    let c = confusion(&t, &p, "M").unwrap();
    assert_eq!((c.tp, c.tn, c.fp, c.fn_), (3, 2, 1, 0));
    let acc = accuracy(&c).unwrap();
    assert!((acc - 5.0 / 6.0).abs() <= 1e-12);
    assert_eq!(format!("{acc:.6}"), "0.833333");
    pass("metric-identity", "100 random vectors exact + worked example");
}

// ------------------------------------------------------------ CLI criteria

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hpelm")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn synth_file(dir: &Path, n: usize, d: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("synth_{n}_{d}_{seed}.csv"));
    let o = run(&[
        "synth",
        "--n",
        &n.to_string(),
        "--d",
        &d.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    path
}

fn report_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn rows_minus_timing(rows: &[Vec<String>]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(i, _)| *i != 6)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

/// Pipeline determinism: the same grid run twice produces identical CSVs
/// minus timing, and --jobs 1 vs --jobs 8 produce identical accuracies.
#[test]
fn pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), 300, 6, 77);
    let mut outputs = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out = dir.path().join(format!("grid_{name}.csv"));
        let o = run(&[
            "grid",
            "--data",
            data.to_str().unwrap(),
            "--grid-file",
            "smoke",
            "--features",
            "all",
            "--features",
            "top:3:f_score",
            "--seed",
            "9",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(report_rows(&out));
    }
    assert_eq!(rows_minus_timing(&outputs[0]), rows_minus_timing(&outputs[1]));
    assert_eq!(rows_minus_timing(&outputs[0]), rows_minus_timing(&outputs[2]));
    pass(
        "pipeline-determinism",
        &format!("{} rows identical across reruns and jobs 1/8", outputs[0].len()),
    );
}

/// Grid structure: the bundled full grid yields exactly 37 rows, each combo
/// summing to 2000 neurons, with no per-row errors.
#[test]
fn grid_structure() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), 160, 6, 5);
    let out = dir.path().join("table4.csv");
    let o = run(&[
        "grid",
        "--data",
        data.to_str().unwrap(),
        "--grid-file",
        "table4",
        "--budget",
        "2000",
        "--seed",
        "3",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = report_rows(&out);
    assert_eq!(rows.len(), 37, "expected exactly 37 report rows");
    for r in &rows {
        let combo = LayerSpec::parse(&r[2]).unwrap();
        assert_eq!(combo.total(), 2000, "combo {} total {}", r[2], combo.total());
        assert_eq!(r[8], "", "row errored: {}", r[8]);
        let acc: f64 = r[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
    pass("grid-structure", "37 rows, all combos sum to 2000");
}

/// Plausibility anchor (non-binding, logged not asserted): an rbf_linf:2000
/// run outside the 0.90–0.98 band warns on stderr and still exits 0.
#[test]
fn plausibility_anchor_logged() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), 160, 6, 13);
    let out = dir.path().join("anchor.csv");
    let o = run(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--combo",
        "rbf_linf:2000",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        o.status.success(),
        "anchor deviations must never fail a run: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = report_rows(&out);
    let test_acc: f64 = rows[0][4].parse().unwrap();
    let in_band = (0.90..=0.98).contains(&test_acc);
    let warned = String::from_utf8_lossy(&o.stderr).contains("0.90-0.98 band");
    assert_eq!(
        !in_band, warned,
        "warning must fire exactly when the accuracy leaves the band"
    );
    println!(
        "ACCEPTANCE plausibility-anchor: LOGGED (test accuracy {test_acc:.4} on synthetic data, \
         in-band={in_band}, warned={warned}; the CTU-13 CSV itself is external)"
    );
}
