//! ELM classifier lifecycle: fit, predict, evaluate, save/load.
//!
//! `fit` instantiates the random hidden layer, one-hot encodes the labels,
//! streams row blocks through the hidden layer into a normal-equation
//! accumulator, solves for the output weights, and measures the training
//! residual `‖Hβ−T‖_F` in a second streaming pass. The model is immutable
//! afterwards; prediction decodes by argmax over the raw output scores with
//! ties broken toward the lowest class index.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::{self, LayerSpec, NeuronGroup};
use crate::data::Preprocess;
use crate::error::{Error, Result};
use crate::linalg::{solve_normal, DenseMatrix, NormalEqAccumulator, Ridge};
use crate::metrics::{self, ConfusionCounts};

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

/// Fit-time options; `seed` keys every random draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitConfig {
    pub seed: u64,
    pub ridge: Ridge,
    /// Streaming block size in rows.
    pub block_rows: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            seed: 0,
            ridge: Ridge::Auto,
            block_rows: DEFAULT_BLOCK_ROWS,
        }
    }
}

/// A trained classifier: frozen hidden layer, solved output weights, class
/// list, and (when trained through the pipeline) the feature schema needed
/// to score raw CSV rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub groups: Vec<NeuronGroup>,
    /// L x m output weights.
    pub beta: DenseMatrix,
    /// Sorted distinct training labels; indexes beta's columns.
    pub classes: Vec<String>,
    /// Encoders for the model's input columns, in input order. Absent for
    /// models fit directly on encoded matrices.
    pub preprocess: Option<Preprocess>,
    /// All feature columns of the training file (scoring-time schema check);
    /// equals the preprocess columns unless feature selection pruned them.
    pub schema_columns: Option<Vec<String>>,
    /// Name of the label column in the training file.
    pub label_column: Option<String>,
    pub seed: u64,
    pub train_residual: f64,
    pub ridge_used: f64,
}

/// Raw output scores for one input row plus the decoded label.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub label_index: usize,
    pub label: String,
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One-hot target block for rows `[start, end)` of `labels`.
fn one_hot_block(labels: &[String], classes: &[String], start: usize, end: usize) -> DenseMatrix {
    let m = classes.len();
    let mut t = DenseMatrix::zeros(end - start, m);
    for (r, label) in labels[start..end].iter().enumerate() {
        let idx = classes.iter().position(|c| c == label).expect("known class");
        t.set(r, idx, 1.0);
    }
    t
}

/// Train on an encoded feature matrix. Classes are the sorted distinct
/// labels; targets are one-hot rows (+1 own class, 0 elsewhere).
pub fn fit(
    spec: &LayerSpec,
    train_x: &DenseMatrix,
    train_labels: &[String],
    cfg: &FitConfig,
) -> Result<ElmModel> {
    if train_x.rows() != train_labels.len() {
        return Err(Error::shape(
            "fit",
            format!("{} rows vs {} labels", train_x.rows(), train_labels.len()),
        ));
    }
    if train_x.rows() < 2 {
        return Err(Error::Data("fit needs at least 2 training rows".into()));
    }
    if cfg.block_rows == 0 {
        return Err(Error::Config("block size must be >= 1".into()));
    }
    let mut classes: Vec<String> = train_labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "training labels are all `{}`; need >= 2 distinct classes",
            classes[0]
        )));
    }

    let groups = activation::instantiate(spec, train_x.cols(), train_x, cfg.seed)?;
    let l: usize = groups.iter().map(NeuronGroup::count).sum();
    let n = train_x.rows();
    let mut acc = NormalEqAccumulator::new(l, classes.len());
    let mut start = 0;
    while start < n {
        let end = (start + cfg.block_rows).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let h = activation::build_h(&groups, &train_x.select_rows(&idx)?)?;
        let t = one_hot_block(train_labels, &classes, start, end);
        acc.ingest(&h, &t)?;
        start = end;
    }
    let report = solve_normal(&acc, cfg.ridge)?;

    // second streaming pass for the exact training residual
    let mut sq = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + cfg.block_rows).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let h = activation::build_h(&groups, &train_x.select_rows(&idx)?)?;
        let t = one_hot_block(train_labels, &classes, start, end);
        let diff = h.matmul(&report.beta)?.sub(&t)?;
        sq += diff.data().iter().map(|v| v * v).sum::<f64>();
        start = end;
    }

    Ok(ElmModel {
        groups,
        beta: report.beta,
        classes,
        preprocess: None,
        schema_columns: None,
        label_column: None,
        seed: cfg.seed,
        train_residual: sq.sqrt(),
        ridge_used: report.ridge_used,
    })
}

impl ElmModel {
    pub fn hidden_count(&self) -> usize {
        self.groups.iter().map(NeuronGroup::count).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.groups.first().map_or(0, NeuronGroup::input_dim)
    }

    /// Attach the feature schema so the model file can score raw CSV rows.
    pub fn with_schema(
        mut self,
        preprocess: Preprocess,
        schema_columns: Vec<String>,
        label_column: String,
    ) -> Self {
        self.preprocess = Some(preprocess);
        self.schema_columns = Some(schema_columns);
        self.label_column = Some(label_column);
        self
    }

    /// Score one encoded feature row.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let block = DenseMatrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.predict_batch(&block)?.pop().expect("one row"))
    }

    /// Score a block of encoded feature rows.
    pub fn predict_batch(&self, x: &DenseMatrix) -> Result<Vec<Prediction>> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "predict",
                format!("input has {} features, model expects {}", x.cols(), self.input_dim()),
            ));
        }
        let h = activation::build_h(&self.groups, x)?;
        let scores = h.matmul(&self.beta)?;
        Ok((0..scores.rows())
            .map(|r| {
                let row = scores.row(r).to_vec();
                let label_index = argmax_lowest(&row);
                Prediction {
                    label: self.classes[label_index].clone(),
                    label_index,
                    scores: row,
                }
            })
            .collect())
    }

    /// Confusion counts over an encoded evaluation set. Every true label
    /// must be a class the model was trained on.
    pub fn evaluate(
        &self,
        x: &DenseMatrix,
        labels: &[String],
        positive_class: Option<&str>,
    ) -> Result<ConfusionCounts> {
        if x.rows() != labels.len() {
            return Err(Error::shape(
                "evaluate",
                format!("{} rows vs {} labels", x.rows(), labels.len()),
            ));
        }
        for l in labels {
            if !self.classes.contains(l) {
                return Err(Error::Data(format!(
                    "unknown class `{l}` (model classes: {})",
                    self.classes.join(", ")
                )));
            }
        }
        let predicted: Vec<String> = self
            .predict_batch(x)?
            .into_iter()
            .map(|p| p.label)
            .collect();
        let positive = positive_class.unwrap_or(&self.classes[0]);
        metrics::confusion_with_classes(labels, &predicted, &self.classes, positive)
    }

    /// Serialize to a self-describing JSON container. JSON numbers round-trip
    /// f64 exactly, so reloaded models score bit-identically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Data(format!("model serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ElmModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read model {}: {e}", path.display())))?;
        let model: ElmModel = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("cannot parse model {}: {e}", path.display())))?;
        if !model.beta.is_finite() {
            return Err(Error::Data("model file contains non-finite weights".into()));
        }
        for g in &model.groups {
            g.validate()?;
        }
        if model.beta.cols() != model.classes.len() {
            return Err(Error::Data(format!(
                "model file weight columns ({}) disagree with class count ({})",
                model.beta.cols(),
                model.classes.len()
            )));
        }
        Ok(model)
    }
}

/// Fit on explicit targets rather than one-hot labels (solve-path internals;
/// kept public within the crate for linearity tests).
#[cfg(test)]
pub(crate) fn solve_targets(
    spec: &LayerSpec,
    x: &DenseMatrix,
    targets: &DenseMatrix,
    seed: u64,
    ridge: Ridge,
) -> Result<(Vec<NeuronGroup>, DenseMatrix)> {
    let groups = activation::instantiate(spec, x.cols(), x, seed)?;
    let l: usize = groups.iter().map(NeuronGroup::count).sum();
    let mut acc = NormalEqAccumulator::new(l, targets.cols());
    let h = activation::build_h(&groups, x)?;
    acc.ingest(&h, targets)?;
    let report = solve_normal(&acc, ridge)?;
    Ok((groups, report.beta))
}
