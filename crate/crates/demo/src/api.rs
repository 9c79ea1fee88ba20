//! JSON-producing operations behind the wasm exports.
//!
//! Everything is seeded and pure, so the page can re-render on every slider
//! change and two browsers with the same controls show the same picture.

use serde::Serialize;

use hpelm::activation::{ActivationKind, LayerSpec};
use hpelm::data::{
    encode_and_normalize, split_stratified, synth_dataset, ColumnEncoder, Dataset, Preprocess,
    SplitAssignment, SynthKind,
};
use hpelm::featsel;
use hpelm::metrics;
use hpelm::model::{fit, ElmModel, FitConfig};
use hpelm::{DenseMatrix, Error, Result, Ridge};

const MAX_POINTS: usize = 5000;

#[derive(Serialize)]
pub struct PointInfo {
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub split: &'static str,
}

/// Rasterized decision function plus the dataset it was trained on.
#[derive(Serialize)]
pub struct DecisionField {
    pub classes: Vec<String>,
    pub combo: String,
    pub seed: u64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub cols: usize,
    pub rows: usize,
    /// Row-major margin (positive-class score minus negative-class score)
    /// over the raster, top row first.
    pub margin: Vec<f64>,
    pub points: Vec<PointInfo>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_residual: f64,
}

fn parse_2d_kind(kind: &str) -> Result<SynthKind> {
    match kind {
        "two_gaussians" => Ok(SynthKind::TwoGaussians),
        "xor" => Ok(SynthKind::Xor),
        _ => Err(Error::Config(format!(
            "decision boundaries are drawn for `two_gaussians` or `xor`, got `{kind}`"
        ))),
    }
}

fn check_n(n: usize) -> Result<()> {
    if (40..=MAX_POINTS).contains(&n) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "n must be between 40 and {MAX_POINTS}, got {n}"
        )))
    }
}

struct TrainedParts {
    ds: Dataset,
    split: SplitAssignment,
    model: ElmModel,
    train_acc: f64,
    test_acc: f64,
}

fn train_on_synth(
    kind: SynthKind,
    d: usize,
    combo: &LayerSpec,
    n: usize,
    seed: u64,
    ridge: Ridge,
) -> Result<TrainedParts> {
    let table = synth_dataset(kind, n, d, seed, 3.0)?;
    let split = split_stratified(&table.labels, 0.7, seed)?;
    let ds = encode_and_normalize(&table, &split)?;
    let train_x = ds.x.select_rows(&split.train_indices)?;
    let test_x = ds.x.select_rows(&split.test_indices)?;
    let train_y: Vec<String> = split.train_indices.iter().map(|&i| ds.labels[i].clone()).collect();
    let test_y: Vec<String> = split.test_indices.iter().map(|&i| ds.labels[i].clone()).collect();
    let cfg = FitConfig {
        seed,
        ridge,
        ..Default::default()
    };
    let model = fit(combo, &train_x, &train_y, &cfg)?;
    let train_acc = metrics::accuracy(&model.evaluate(&train_x, &train_y, None)?)?;
    let test_acc = metrics::accuracy(&model.evaluate(&test_x, &test_y, None)?)?;
    Ok(TrainedParts {
        ds,
        split,
        model,
        train_acc,
        test_acc,
    })
}

fn numeric_encoder(pre: &Preprocess, idx: usize) -> Result<(f64, f64)> {
    match &pre.columns[idx].1 {
        ColumnEncoder::Numeric { mean, std, .. } => Ok((*mean, *std)),
        ColumnEncoder::Categorical { .. } => {
            Err(Error::Config("expected a numeric column".into()))
        }
    }
}

/// Train on a 2-D synthetic dataset and rasterize the class margin over the
/// feature plane.
pub fn decision_boundary_json(
    kind: &str,
    combo: &str,
    n: usize,
    seed: u64,
    ridge: &str,
    resolution: usize,
) -> Result<String> {
    let kind = parse_2d_kind(kind)?;
    check_n(n)?;
    if !(8..=512).contains(&resolution) {
        return Err(Error::Config(format!(
            "resolution must be between 8 and 512, got {resolution}"
        )));
    }
    let combo = LayerSpec::parse(combo)?;
    let ridge: Ridge = ridge.parse()?;
    let parts = train_on_synth(kind, 2, &combo, n, seed, ridge)?;

    let (x0, x1, y0, y1) = (-7.0, 7.0, -7.0, 7.0);
    let (mx, sx) = numeric_encoder(&parts.ds.preprocess, 0)?;
    let (my, sy) = numeric_encoder(&parts.ds.preprocess, 1)?;
    let encode = |v: f64, mean: f64, std: f64| if std > 0.0 { (v - mean) / std } else { 0.0 };

    // raster rows top-down so the page can blit directly into ImageData
    let mut grid = Vec::with_capacity(resolution * resolution * 2);
    for r in 0..resolution {
        let y = y1 - (r as f64 + 0.5) / resolution as f64 * (y1 - y0);
        for c in 0..resolution {
            let x = x0 + (c as f64 + 0.5) / resolution as f64 * (x1 - x0);
            grid.push(encode(x, mx, sx));
            grid.push(encode(y, my, sy));
        }
    }
    let grid = DenseMatrix::from_vec(resolution * resolution, 2, grid)?;
    let preds = parts.model.predict_batch(&grid)?;
    let margin: Vec<f64> = preds.iter().map(|p| p.scores[1] - p.scores[0]).collect();

    // raw point coordinates for the scatter overlay
    let decode = |v: f64, mean: f64, std: f64| if std > 0.0 { v * std + mean } else { mean };
    let mut points = Vec::with_capacity(parts.ds.x.rows());
    let in_split = |idx: usize| -> &'static str {
        if parts.split.train_indices.binary_search(&idx).is_ok() {
            "train"
        } else {
            "test"
        }
    };
    for i in 0..parts.ds.x.rows() {
        points.push(PointInfo {
            x: decode(parts.ds.x.get(i, 0), mx, sx),
            y: decode(parts.ds.x.get(i, 1), my, sy),
            label: parts.ds.labels[i].clone(),
            split: in_split(i),
        });
    }

    let field = DecisionField {
        classes: parts.model.classes.clone(),
        combo: combo.to_string(),
        seed,
        x0,
        x1,
        y0,
        y1,
        cols: resolution,
        rows: resolution,
        margin,
        points,
        train_accuracy: parts.train_acc,
        test_accuracy: parts.test_acc,
        train_residual: parts.model.train_residual,
    };
    serde_json::to_string(&field).map_err(|e| Error::Data(e.to_string()))
}

#[derive(Serialize)]
pub struct RankingReport {
    pub names: Vec<String>,
    pub signal_index: usize,
    pub f_scores: Vec<f64>,
    pub f_order: Vec<usize>,
    pub fisher_scores: Vec<f64>,
    pub fisher_order: Vec<usize>,
}

/// Rank the features of a planted-feature dataset with both methods.
pub fn feature_ranking_json(n: usize, d: usize, seed: u64) -> Result<String> {
    check_n(n)?;
    if !(2..=32).contains(&d) {
        return Err(Error::Config(format!("d must be between 2 and 32, got {d}")));
    }
    let table = synth_dataset(SynthKind::PlantedFeature, n, d, seed, 3.0)?;
    let all: Vec<usize> = (0..table.n_rows()).collect();
    let pre = hpelm::data::fit_preprocess(&table, &all)?;
    let x = pre.encode(&table)?;
    let f = featsel::f_score(&x, &table.labels)?;
    let fisher = featsel::fisher_score(&x, &table.labels)?;
    let names = table.feature_names();
    let signal_index = names
        .iter()
        .position(|n| n == "signal")
        .expect("planted dataset names its signal column");
    let report = RankingReport {
        names,
        signal_index,
        f_scores: f.scores,
        f_order: f.order,
        fisher_scores: fisher.scores,
        fisher_order: fisher.order,
    };
    serde_json::to_string(&report).map_err(|e| Error::Data(e.to_string()))
}

#[derive(Serialize)]
pub struct AccuracyCurve {
    pub neurons: Vec<usize>,
    pub train_accuracy: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub train_residual: Vec<f64>,
}

/// Sweep the hidden-layer size for one activation kind on a 2-D dataset.
pub fn accuracy_curve_json(kind: &str, activation: &str, n: usize, seed: u64) -> Result<String> {
    let kind = parse_2d_kind(kind)?;
    check_n(n)?;
    let act: ActivationKind = activation.parse()?;
    let mut curve = AccuracyCurve {
        neurons: vec![5, 10, 20, 40, 80, 160],
        train_accuracy: Vec::new(),
        test_accuracy: Vec::new(),
        train_residual: Vec::new(),
    };
    for &l in &curve.neurons.clone() {
        let combo = LayerSpec::single(act, l)?;
        let parts = train_on_synth(kind, 2, &combo, n, seed, Ridge::Auto)?;
        curve.train_accuracy.push(parts.train_acc);
        curve.test_accuracy.push(parts.test_acc);
        curve.train_residual.push(parts.model.train_residual);
    }
    serde_json::to_string(&curve).map_err(|e| Error::Data(e.to_string()))
}
