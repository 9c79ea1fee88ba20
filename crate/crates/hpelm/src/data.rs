//! Labeled CSV ingestion, categorical encoding, z-score normalization,
//! stratified 70/30 splitting, and the synthetic dataset generators used by
//! the test and demo surfaces.
//!
//! Encoders and normalization statistics are always derived from the
//! training rows alone and then applied to everything, so nothing from the
//! test split leaks into preprocessing. Categorical columns become integer
//! codes ranked by descending training frequency (ties lexicographic), with
//! a reserved code for values unseen in training, and the code column is
//! z-scored like any numeric column.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::seeding::mix;

const SPLIT_TAG: u64 = 0x7370_6c69;
const SYNTH_TAG: u64 = 0x7379_6e74;
const PLANT_TAG: u64 = 0x706c_6e74;

/// Reserved vocabulary token for missing categorical cells.
pub const MISSING_TOKEN: &str = "\u{2205}"; // ∅

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl std::str::FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            _ => Err(Error::Config(format!(
                "column type must be `numeric` or `categorical`, got `{s}`"
            ))),
        }
    }
}

/// One feature column of a loaded table; `None` cells were empty.
#[derive(Debug, Clone)]
pub struct RawColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub cells: Vec<Option<String>>,
}

/// A typed, labeled feature table as loaded from CSV (or synthesized).
#[derive(Debug, Clone)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub label_name: String,
    pub labels: Vec<String>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&RawColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Build a table from an all-numeric row set (used by the generators).
    pub fn from_numeric_rows(
        feature_names: &[String],
        label_name: &str,
        rows: &[Vec<f64>],
        labels: &[String],
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::shape(
                "from_numeric_rows",
                format!("{} rows vs {} labels", rows.len(), labels.len()),
            ));
        }
        let d = feature_names.len();
        let mut columns: Vec<RawColumn> = feature_names
            .iter()
            .map(|n| RawColumn {
                name: n.clone(),
                kind: ColumnKind::Numeric,
                cells: Vec::with_capacity(rows.len()),
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::shape(
                    "from_numeric_rows",
                    format!("row {i} has {} values, expected {d}", row.len()),
                ));
            }
            for (c, v) in columns.iter_mut().zip(row) {
                // f64 Display round-trips exactly, so CSV export/import of
                // generated data is lossless
                c.cells.push(Some(format!("{v}")));
            }
        }
        Ok(RawTable {
            columns,
            label_name: label_name.to_string(),
            labels: labels.to_vec(),
        })
    }

    /// Write the table back out as CSV (header row first).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.label_name);
        w.write_record(&header)
            .map_err(|e| Error::Data(e.to_string()))?;
        for r in 0..self.n_rows() {
            let mut rec: Vec<&str> = self
                .columns
                .iter()
                .map(|c| c.cells[r].as_deref().unwrap_or(""))
                .collect();
            rec.push(&self.labels[r]);
            w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_numeric(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Load a labeled CSV. A column is numeric when every non-empty cell parses
/// as a finite real; overrides force a column either way. Ragged rows are
/// reported with their line number (header = line 1).
pub fn load_csv(
    path: &Path,
    label_column: &str,
    overrides: &[(String, ColumnKind)],
) -> Result<RawTable> {
    load_csv_impl(path, Some(label_column), overrides)
}

/// Load a feature-only CSV (no label column); labels come back empty.
pub fn load_csv_unlabeled(path: &Path, overrides: &[(String, ColumnKind)]) -> Result<RawTable> {
    load_csv_impl(path, None, overrides)
}

fn load_csv_impl(
    path: &Path,
    label_column: Option<&str>,
    overrides: &[(String, ColumnKind)],
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    {
        let mut seen = headers.clone();
        seen.sort();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Data(format!(
                    "{}: duplicate column `{}`",
                    path.display(),
                    w[0]
                )));
            }
        }
    }
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!(
                "{}: label column `{name}` not found (columns: {})",
                path.display(),
                headers.join(", ")
            ))
        })?),
        None => None,
    };
    for (name, _) in overrides {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::Config(format!(
                "column type override names unknown column `{name}`"
            )));
        }
    }

    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| Some(i) != label_idx)
        .collect();
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); feature_idx.len()];
    let mut labels = Vec::new();
    for (rec_no, result) in rdr.records().enumerate() {
        let line = rec_no + 2; // header is line 1
        let record = result.map_err(|e| {
            Error::Data(format!("{}: line {line}: {e}", path.display()))
        })?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                headers.len(),
                record.len()
            )));
        }
        if let Some(li) = label_idx {
            let label = record.get(li).unwrap_or("");
            if label.is_empty() {
                return Err(Error::Data(format!(
                    "{}: line {line}: empty label",
                    path.display()
                )));
            }
            labels.push(label.to_string());
        } else {
            labels.push(String::new());
        }
        for (slot, &i) in cells.iter_mut().zip(&feature_idx) {
            let v = record.get(i).unwrap_or("");
            slot.push(if v.is_empty() { None } else { Some(v.to_string()) });
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let mut columns = Vec::with_capacity(feature_idx.len());
    for (slot, &i) in cells.into_iter().zip(&feature_idx) {
        let name = headers[i].clone();
        let forced = overrides
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, k)| *k);
        let kind = forced.unwrap_or_else(|| {
            let all_numeric = slot
                .iter()
                .flatten()
                .all(|c| parse_numeric(c).is_some());
            if all_numeric {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        });
        if kind == ColumnKind::Numeric {
            // a forced-numeric column must actually parse
            for (r, cell) in slot.iter().enumerate() {
                if let Some(c) = cell {
                    if parse_numeric(c).is_none() {
                        return Err(Error::Data(format!(
                            "{}: line {}: column `{name}` forced numeric but `{c}` does not parse",
                            path.display(),
                            r + 2
                        )));
                    }
                }
            }
        }
        columns.push(RawColumn {
            name,
            kind,
            cells: slot,
        });
    }
    Ok(RawTable {
        columns,
        label_name: label_column.unwrap_or("").to_string(),
        labels,
    })
}

/// Stratified train/test assignment. Deterministic given the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

impl SplitAssignment {
    /// `index,train|test` lines, ascending by index.
    pub fn to_manifest(&self) -> String {
        let mut rows: Vec<(usize, &str)> = self
            .train_indices
            .iter()
            .map(|&i| (i, "train"))
            .chain(self.test_indices.iter().map(|&i| (i, "test")))
            .collect();
        rows.sort();
        let mut out = String::new();
        for (i, part) in rows {
            out.push_str(&format!("{i},{part}\n"));
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (idx, part) = line.split_once(',').ok_or_else(|| {
                Error::Data(format!("split manifest line {}: expected index,train|test", ln + 1))
            })?;
            let idx: usize = idx.trim().parse().map_err(|_| {
                Error::Data(format!("split manifest line {}: bad index `{idx}`", ln + 1))
            })?;
            match part.trim() {
                "train" => train.push(idx),
                "test" => test.push(idx),
                other => {
                    return Err(Error::Data(format!(
                        "split manifest line {}: expected train|test, got `{other}`",
                        ln + 1
                    )))
                }
            }
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Data(
                "split manifest needs at least one train and one test row".into(),
            ));
        }
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort();
        for w in all.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Data(format!(
                    "split manifest assigns index {} twice",
                    w[0]
                )));
            }
        }
        let frac = train.len() as f64 / all.len() as f64;
        Ok(SplitAssignment {
            train_indices: train,
            test_indices: test,
            seed: 0,
            train_fraction: frac,
        })
    }
}

/// Per-class seeded shuffle, then per-class counts `floor(frac·nₖ + 0.5)`
/// corrected one sample at a time until the total equals
/// `floor(frac·n + 0.5)` exactly.
pub fn split_stratified(
    labels: &[String],
    train_fraction: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let n = labels.len();
    let mut classes: Vec<&str> = labels.iter().map(String::as_str).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "stratified split needs >= 2 classes, got {}",
            classes.len()
        )));
    }
    let mut per_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.as_str() == *c)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for (c, idx) in classes.iter().zip(&per_class) {
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "stratified split needs >= 2 samples per class; class `{c}` has {}",
                idx.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, SPLIT_TAG]));
    for idx in &mut per_class {
        idx.shuffle(&mut rng);
    }

    let sizes: Vec<usize> = per_class.iter().map(Vec::len).collect();
    let mut take: Vec<usize> = sizes
        .iter()
        .map(|&nk| {
            let t = (train_fraction * nk as f64 + 0.5).floor() as usize;
            t.clamp(1, nk - 1)
        })
        .collect();
    let target = ((train_fraction * n as f64 + 0.5).floor() as usize)
        .clamp(classes.len(), n - classes.len());

    // trim/grow the classes with the largest/smallest fractional overshoot
    loop {
        let total: usize = take.iter().sum();
        if total == target {
            break;
        }
        let overshoot =
            |k: usize| take[k] as f64 - train_fraction * sizes[k] as f64;
        let candidate = if total > target {
            (0..take.len())
                .filter(|&k| take[k] > 1)
                .max_by(|&a, &b| {
                    overshoot(a)
                        .partial_cmp(&overshoot(b))
                        .unwrap()
                        .then(sizes[a].cmp(&sizes[b]))
                        .then(b.cmp(&a))
                })
        } else {
            (0..take.len())
                .filter(|&k| take[k] < sizes[k] - 1)
                .min_by(|&a, &b| {
                    overshoot(a)
                        .partial_cmp(&overshoot(b))
                        .unwrap()
                        .then(sizes[b].cmp(&sizes[a]))
                        .then(a.cmp(&b))
                })
        };
        let Some(k) = candidate else { break };
        if total > target {
            take[k] -= 1;
        } else {
            take[k] += 1;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (idx, &t) in per_class.iter().zip(&take) {
        train.extend_from_slice(&idx[..t]);
        test.extend_from_slice(&idx[t..]);
    }
    train.sort();
    test.sort();
    Ok(SplitAssignment {
        train_indices: train,
        test_indices: test,
        seed,
        train_fraction,
    })
}

/// Fitted per-column encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnEncoder {
    Numeric {
        mean: f64,
        /// Population stdev of the (imputed) training column; 0 marks a
        /// constant column, which encodes to all-zero.
        std: f64,
        /// Training median, used to impute missing cells.
        median: f64,
    },
    Categorical {
        /// Tokens by descending training frequency (ties lexicographic);
        /// code = position, unseen values encode as `vocab.len()`.
        vocab: Vec<String>,
        mean: f64,
        std: f64,
    },
}

/// Ordered named encoders — the training-time feature schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub columns: Vec<(String, ColumnEncoder)>,
}

fn median_of(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fit encoders and normalization statistics from the training rows only.
pub fn fit_preprocess(raw: &RawTable, train_indices: &[usize]) -> Result<Preprocess> {
    if train_indices.is_empty() {
        return Err(Error::Data("empty training split".into()));
    }
    for &i in train_indices {
        if i >= raw.n_rows() {
            return Err(Error::Data(format!(
                "split index {i} out of range for {} rows",
                raw.n_rows()
            )));
        }
    }
    let mut columns = Vec::with_capacity(raw.columns.len());
    for col in &raw.columns {
        let enc = match col.kind {
            ColumnKind::Numeric => {
                let present: Vec<f64> = train_indices
                    .iter()
                    .filter_map(|&i| col.cells[i].as_deref())
                    .map(|c| parse_numeric(c).expect("typed numeric"))
                    .collect();
                let median = median_of(present.clone());
                let imputed: Vec<f64> = train_indices
                    .iter()
                    .map(|&i| {
                        col.cells[i]
                            .as_deref()
                            .and_then(parse_numeric)
                            .unwrap_or(median)
                    })
                    .collect();
                let (mean, std) = mean_std(&imputed);
                ColumnEncoder::Numeric { mean, std, median }
            }
            ColumnKind::Categorical => {
                let mut freq: HashMap<&str, usize> = HashMap::new();
                for &i in train_indices {
                    let token = col.cells[i].as_deref().unwrap_or(MISSING_TOKEN);
                    *freq.entry(token).or_insert(0) += 1;
                }
                let mut vocab: Vec<(&str, usize)> = freq.into_iter().collect();
                vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
                let vocab: Vec<String> = vocab.into_iter().map(|(t, _)| t.to_string()).collect();
                let codes: Vec<f64> = train_indices
                    .iter()
                    .map(|&i| {
                        let token = col.cells[i].as_deref().unwrap_or(MISSING_TOKEN);
                        vocab.iter().position(|v| v == token).unwrap() as f64
                    })
                    .collect();
                let (mean, std) = mean_std(&codes);
                ColumnEncoder::Categorical { vocab, mean, std }
            }
        };
        columns.push((col.name.clone(), enc));
    }
    Ok(Preprocess { columns })
}

impl ColumnEncoder {
    fn encode_cell(&self, cell: Option<&str>, col: &str, line: usize) -> Result<f64> {
        match self {
            ColumnEncoder::Numeric { mean, std, median } => {
                let v = match cell {
                    None => *median,
                    Some(c) => parse_numeric(c).ok_or_else(|| {
                        Error::Data(format!(
                            "line {line}: column `{col}`: `{c}` is not numeric"
                        ))
                    })?,
                };
                Ok(if *std > 0.0 { (v - mean) / std } else { 0.0 })
            }
            ColumnEncoder::Categorical { vocab, mean, std } => {
                let token = cell.unwrap_or(MISSING_TOKEN);
                let code = vocab
                    .iter()
                    .position(|v| v == token)
                    .unwrap_or(vocab.len()) as f64;
                Ok(if *std > 0.0 { (code - mean) / std } else { 0.0 })
            }
        }
    }
}

impl Preprocess {
    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Encode every row of `raw`, columns in this schema's order. Columns are
    /// matched by name.
    pub fn encode(&self, raw: &RawTable) -> Result<DenseMatrix> {
        let cols: Vec<&RawColumn> = self
            .columns
            .iter()
            .map(|(name, _)| {
                raw.column(name)
                    .ok_or_else(|| Error::Data(format!("missing column `{name}`")))
            })
            .collect::<Result<_>>()?;
        let n = raw.n_rows();
        let d = self.columns.len();
        let mut data = Vec::with_capacity(n * d);
        for r in 0..n {
            for (col, (name, enc)) in cols.iter().zip(&self.columns) {
                data.push(enc.encode_cell(col.cells[r].as_deref(), name, r + 2)?);
            }
        }
        DenseMatrix::from_vec(n, d, data)
    }

    /// Keep only the named columns, in the given order.
    pub fn subset(&self, names: &[String]) -> Result<Preprocess> {
        let columns = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .find(|(name, _)| name == n)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("missing column `{n}` in schema")))
            })
            .collect::<Result<_>>()?;
        Ok(Preprocess { columns })
    }
}

/// Encoded feature table plus everything needed to reproduce the encoding.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
    /// Sorted distinct labels over the whole table.
    pub class_names: Vec<String>,
    pub preprocess: Preprocess,
}

/// Fit encoders on the training rows of `split`, then encode all rows.
pub fn encode_and_normalize(raw: &RawTable, split: &SplitAssignment) -> Result<Dataset> {
    let preprocess = fit_preprocess(raw, &split.train_indices)?;
    let x = preprocess.encode(raw)?;
    let mut class_names: Vec<String> = raw.labels.clone();
    class_names.sort();
    class_names.dedup();
    Ok(Dataset {
        x,
        labels: raw.labels.clone(),
        feature_names: raw.feature_names(),
        class_names,
        preprocess,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Two spherical Gaussians at ±offset·1.
    TwoGaussians,
    /// Four Gaussians in an XOR layout over the first two features.
    Xor,
    /// One informative feature (named `signal`, position seed-derived) among
    /// unit-variance noise features.
    PlantedFeature,
}

impl SynthKind {
    pub fn token(self) -> &'static str {
        match self {
            SynthKind::TwoGaussians => "two_gaussians",
            SynthKind::Xor => "xor",
            SynthKind::PlantedFeature => "planted_feature",
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_gaussians" => Ok(SynthKind::TwoGaussians),
            "xor" => Ok(SynthKind::Xor),
            "planted_feature" => Ok(SynthKind::PlantedFeature),
            _ => Err(Error::Config(format!(
                "unknown synthetic kind `{s}` (expected two_gaussians, xor, planted_feature)"
            ))),
        }
    }
}

/// Deterministic synthetic dataset generator. Labels are `benign`/`malware`;
/// classes are exactly balanced for n divisible by the class count.
pub fn synth_dataset(kind: SynthKind, n: usize, d: usize, seed: u64, offset: f64) -> Result<RawTable> {
    if n < 20 || d < 2 {
        return Err(Error::Config(format!(
            "synthetic datasets need n >= 20 and d >= 2, got n={n}, d={d}"
        )));
    }
    if !offset.is_finite() {
        return Err(Error::Config(format!("offset must be finite, got {offset}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, SYNTH_TAG, kind as u64]));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();

    match kind {
        SynthKind::TwoGaussians => {
            for i in 0..n {
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                let row: Vec<f64> = (0..d)
                    .map(|_| sign * offset + unit.sample(&mut rng))
                    .collect();
                rows.push(row);
                labels.push(if i % 2 == 0 { "benign" } else { "malware" }.to_string());
            }
        }
        SynthKind::Xor => {
            const QUADS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
            for i in 0..n {
                let (s1, s2) = QUADS[i % 4];
                let mut row = vec![
                    s1 * offset + unit.sample(&mut rng),
                    s2 * offset + unit.sample(&mut rng),
                ];
                for _ in 2..d {
                    row.push(unit.sample(&mut rng));
                }
                rows.push(row);
                // same-sign quadrants are one class: not linearly separable
                labels.push(if i % 4 < 2 { "malware" } else { "benign" }.to_string());
            }
        }
        SynthKind::PlantedFeature => {
            let planted = (mix(&[seed, PLANT_TAG]) % d as u64) as usize;
            names[planted] = "signal".to_string();
            let narrow = Normal::new(0.0, 0.1).expect("narrow normal");
            for i in 0..n {
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                let row: Vec<f64> = (0..d)
                    .map(|j| {
                        if j == planted {
                            sign * 2.0 + narrow.sample(&mut rng)
                        } else {
                            unit.sample(&mut rng)
                        }
                    })
                    .collect();
                rows.push(row);
                labels.push(if i % 2 == 0 { "benign" } else { "malware" }.to_string());
            }
        }
    }
    RawTable::from_numeric_rows(&names, "label", &rows, &labels)
}
