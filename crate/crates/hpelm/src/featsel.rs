//! F-score and Fisher-score feature ranking with top-k selection.
//!
//! Both scores are ratios of between-class mean separation to within-class
//! variance, computed per feature. F-score is the two-class form; Fisher
//! score generalizes to any class count. Sample variances (n-1) are used
//! throughout. A feature that is bitwise constant within a class contributes
//! exactly zero variance (guarded against float rounding), so the
//! zero-denominator rules behave exactly: denominator 0 with numerator 0
//! scores 0, denominator 0 with positive numerator scores the 1e12 sentinel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Sentinel score for perfectly separating features (zero within-class
/// variance, distinct means). Keeps rankings total without infinities.
pub const ZERO_VARIANCE_SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    FScore,
    Fisher,
}

impl RankMethod {
    pub fn token(self) -> &'static str {
        match self {
            RankMethod::FScore => "f_score",
            RankMethod::Fisher => "fisher",
        }
    }
}

impl std::str::FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f_score" => Ok(RankMethod::FScore),
            "fisher" => Ok(RankMethod::Fisher),
            _ => Err(Error::Config(format!(
                "unknown ranking method `{s}` (expected f_score or fisher)"
            ))),
        }
    }
}

impl std::fmt::Display for RankMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Per-feature scores plus the descending-score permutation (ties break
/// toward the lower feature index).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: RankMethod,
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

fn ranking_from_scores(method: RankMethod, scores: Vec<f64>) -> FeatureRanking {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));
    FeatureRanking {
        method,
        scores,
        order,
    }
}

struct ClassStats {
    count: usize,
    mean: f64,
    /// Sample variance; exactly 0.0 when the class values are bitwise equal.
    variance: f64,
}

fn class_stats(values: &[f64]) -> ClassStats {
    let n = values.len();
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return ClassStats {
            count: n,
            mean: first,
            variance: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    ClassStats {
        count: n,
        mean,
        variance,
    }
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        if numerator == 0.0 {
            0.0
        } else {
            ZERO_VARIANCE_SENTINEL
        }
    } else {
        let s = numerator / denominator;
        if s.is_finite() {
            s
        } else {
            ZERO_VARIANCE_SENTINEL
        }
    }
}

fn group_by_class(labels: &[String]) -> Vec<(&str, Vec<usize>)> {
    let mut classes: Vec<&str> = labels.iter().map(String::as_str).collect();
    classes.sort();
    classes.dedup();
    classes
        .into_iter()
        .map(|c| {
            let idx = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.as_str() == c)
                .map(|(i, _)| i)
                .collect();
            (c, idx)
        })
        .collect()
}

fn check_shapes(x: &DenseMatrix, labels: &[String]) -> Result<()> {
    if x.rows() != labels.len() {
        return Err(Error::shape(
            "feature ranking",
            format!("{} rows vs {} labels", x.rows(), labels.len()),
        ));
    }
    if x.cols() == 0 {
        return Err(Error::shape("feature ranking", "matrix has no columns"));
    }
    Ok(())
}

/// Two-class discriminative F-score per feature:
/// `[(x̄⁺−x̄)² + (x̄⁻−x̄)²] / (var⁺ + var⁻)`.
pub fn f_score(x: &DenseMatrix, labels: &[String]) -> Result<FeatureRanking> {
    check_shapes(x, labels)?;
    let groups = group_by_class(labels);
    if groups.len() != 2 {
        return Err(Error::Config(format!(
            "f_score requires exactly 2 classes, got {}",
            groups.len()
        )));
    }
    for (c, idx) in &groups {
        if idx.len() < 2 {
            return Err(Error::Config(format!(
                "f_score requires >= 2 samples per class; class `{c}` has {}",
                idx.len()
            )));
        }
    }
    let d = x.cols();
    let n = x.rows();
    let mut scores = Vec::with_capacity(d);
    for j in 0..d {
        let column: Vec<f64> = (0..n).map(|r| x.get(r, j)).collect();
        let first = column[0];
        if column.iter().all(|&v| v == first) {
            scores.push(0.0);
            continue;
        }
        let overall = column.iter().sum::<f64>() / n as f64;
        let pos = class_stats(&pick(&column, &groups[0].1));
        let neg = class_stats(&pick(&column, &groups[1].1));
        let num = (pos.mean - overall).powi(2) + (neg.mean - overall).powi(2);
        scores.push(ratio(num, pos.variance + neg.variance));
    }
    Ok(ranking_from_scores(RankMethod::FScore, scores))
}

/// Fisher score per feature: `Σₖ nₖ(μⱼₖ−μⱼ)² / Σₖ nₖ σ²ⱼₖ`.
pub fn fisher_score(x: &DenseMatrix, labels: &[String]) -> Result<FeatureRanking> {
    check_shapes(x, labels)?;
    let groups = group_by_class(labels);
    if groups.len() < 2 {
        return Err(Error::Config(format!(
            "fisher_score requires >= 2 classes, got {}",
            groups.len()
        )));
    }
    for (c, idx) in &groups {
        if idx.len() < 2 {
            return Err(Error::Config(format!(
                "fisher_score requires >= 2 samples per class; class `{c}` has {}",
                idx.len()
            )));
        }
    }
    let d = x.cols();
    let n = x.rows();
    let mut scores = Vec::with_capacity(d);
    for j in 0..d {
        let column: Vec<f64> = (0..n).map(|r| x.get(r, j)).collect();
        let first = column[0];
        if column.iter().all(|&v| v == first) {
            scores.push(0.0);
            continue;
        }
        let overall = column.iter().sum::<f64>() / n as f64;
        let mut between = 0.0;
        let mut within = 0.0;
        for (_, idx) in &groups {
            let stats = class_stats(&pick(&column, idx));
            between += stats.count as f64 * (stats.mean - overall).powi(2);
            within += stats.count as f64 * stats.variance;
        }
        scores.push(ratio(between, within));
    }
    Ok(ranking_from_scores(RankMethod::Fisher, scores))
}

fn pick(column: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| column[i]).collect()
}

/// First k entries of the ranking order.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<usize>> {
    let d = ranking.order.len();
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "top-k selection needs 1 <= k <= {d}, got {k}"
        )));
    }
    Ok(ranking.order[..k].to_vec())
}

/// Priority-list display format: `[3 7 1]`.
pub fn format_priority(indices: &[usize]) -> String {
    let parts: Vec<String> = indices.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(" "))
}

/// Ranking report CSV: `feature_index,feature_name,method,score,rank`.
pub fn ranking_csv(ranking: &FeatureRanking, feature_names: &[String]) -> Result<String> {
    if feature_names.len() != ranking.scores.len() {
        return Err(Error::shape(
            "ranking_csv",
            format!(
                "{} names vs {} scores",
                feature_names.len(),
                ranking.scores.len()
            ),
        ));
    }
    let mut out = String::from("feature_index,feature_name,method,score,rank\n");
    for (rank, &j) in ranking.order.iter().enumerate() {
        out.push_str(&format!(
            "{j},{},{},{},{}\n",
            feature_names[j],
            ranking.method,
            ranking.scores[j],
            rank + 1
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn identical_feature_scores_zero() {
        // feature constant 0.1 everywhere: float means would not cancel
        // exactly without the constant guard
        let x = DenseMatrix::from_rows(&vec![vec![0.1]; 8]).unwrap();
        let l = labels(&["a", "a", "a", "a", "b", "b", "b", "b"]);
        let r = f_score(&x, &l).unwrap();
        assert_eq!(r.scores[0], 0.0);
        let r = fisher_score(&x, &l).unwrap();
        assert_eq!(r.scores[0], 0.0);
    }

    #[test]
    fn perfect_indicator_gets_sentinel_and_rank_one() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![(i % 3) as f64, if i < 4 { 0.0 } else { 1.0 }])
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let l = labels(&["a", "a", "a", "a", "b", "b", "b", "b"]);
        let r = f_score(&x, &l).unwrap();
        assert_eq!(r.scores[1], ZERO_VARIANCE_SENTINEL);
        assert_eq!(r.order[0], 1);
    }

    #[test]
    fn hand_computed_eight_sample_instance() {
        // feature A: class a = {1,2,3,4}, class b = {5,6,7,8}
        //   overall mean 4.5, class means 2.5/6.5, sample variances 5/3 each
        //   F(A) = ((2.5-4.5)² + (6.5-4.5)²) / (5/3 + 5/3) = 8 / (10/3) = 2.4
        // feature B: both classes {1,2,3,4} → F(B) = 0 by symmetry of means
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let b = [1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0];
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![a[i], b[i]]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let l = labels(&["a", "a", "a", "a", "b", "b", "b", "b"]);
        let r = f_score(&x, &l).unwrap();
        assert!((r.scores[0] - 2.4).abs() < 1e-12, "F(A) = {}", r.scores[0]);
        // B's class means both equal the overall mean (2.5), so the
        // numerator vanishes
        assert!(r.scores[1].abs() < 1e-12, "F(B) = {}", r.scores[1]);
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn f_score_rejects_non_binary() {
        let x = DenseMatrix::from_rows(&vec![vec![0.0]; 6]).unwrap();
        let l = labels(&["a", "a", "b", "b", "c", "c"]);
        assert!(f_score(&x, &l).is_err());
        assert!(fisher_score(&x, &l).is_ok());
    }

    #[test]
    fn fisher_invariant_under_positive_feature_rescaling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random::<f64>() * 3.0).collect())
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let l: Vec<String> = (0..30).map(|i| format!("c{}", i % 3)).collect();
        let base = fisher_score(&x, &l).unwrap();

        let scales = [2.0, 0.25, 10.0, 7.5];
        let scaled_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&scales).map(|(v, s)| v * s).collect())
            .collect();
        let xs = DenseMatrix::from_rows(&scaled_rows).unwrap();
        let scaled = fisher_score(&xs, &l).unwrap();
        assert_eq!(base.order, scaled.order);
        for (a, b) in base.scores.iter().zip(&scaled.scores) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fisher_three_class_planted_feature_ranks_first() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let narrow = Normal::new(0.0, 0.1).unwrap();
        let wide = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut l = Vec::new();
        for i in 0..60 {
            let class = i % 3;
            let mean = [-2.0, 0.0, 2.0][class];
            let mut row = vec![mean + narrow.sample(&mut rng)];
            for _ in 0..3 {
                row.push(wide.sample(&mut rng));
            }
            rows.push(row);
            l.push(format!("c{class}"));
        }
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let r = fisher_score(&x, &l).unwrap();
        assert_eq!(r.order[0], 0, "scores: {:?}", r.scores);

        // direct formula evaluation as an independent oracle for feature 0
        let col: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let overall = col.iter().sum::<f64>() / col.len() as f64;
        let mut between = 0.0;
        let mut within = 0.0;
        for class in 0..3 {
            let vals: Vec<f64> = col
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 3 == class)
                .map(|(_, v)| *v)
                .collect();
            let nk = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / nk;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nk - 1.0);
            between += nk * (mean - overall).powi(2);
            within += nk * var;
        }
        let oracle = between / within;
        assert!((r.scores[0] - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn order_is_a_valid_descending_permutation() {
        let r = ranking_from_scores(RankMethod::Fisher, vec![0.5, 2.0, 0.5, 1.0]);
        assert_eq!(r.order, vec![1, 3, 0, 2]); // tie between 0 and 2 → 0 first
        let mut sorted = r.order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn top_k_selection_and_priority_format() {
        let r = ranking_from_scores(
            RankMethod::FScore,
            vec![0.1, 5.0, 0.2, 9.0, 0.0, 0.3, 0.4, 7.0],
        );
        assert_eq!(r.order[..3], [3, 7, 1]);
        assert_eq!(select_top_k(&r, 3).unwrap(), vec![3, 7, 1]);
        assert_eq!(format_priority(&select_top_k(&r, 3).unwrap()), "[3 7 1]");
        assert_eq!(select_top_k(&r, 8).unwrap(), r.order);
        assert_eq!(select_top_k(&r, 1).unwrap(), vec![3]);
        assert!(select_top_k(&r, 0).is_err());
        assert!(select_top_k(&r, 9).is_err());
    }

    #[test]
    fn ranking_csv_lists_rank_order() {
        let r = ranking_from_scores(RankMethod::FScore, vec![1.0, 3.0]);
        let names = labels(&["dur", "bytes"]);
        let csv = ranking_csv(&r, &names).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "feature_index,feature_name,method,score,rank");
        assert_eq!(lines[1], "1,bytes,f_score,3,1");
        assert_eq!(lines[2], "0,dur,f_score,1,2");
    }

    #[test]
    fn methods_agree_on_planted_two_class_argmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let mut rows = Vec::new();
            let mut l = Vec::new();
            for i in 0..40 {
                let class = i % 2;
                let mut row = vec![
                    if class == 0 { -2.0 } else { 2.0 } + 0.1 * (rng.random::<f64>() - 0.5),
                ];
                for _ in 0..4 {
                    row.push(rng.random::<f64>() * 2.0 - 1.0);
                }
                rows.push(row);
                l.push(format!("c{class}"));
            }
            let x = DenseMatrix::from_rows(&rows).unwrap();
            let a = f_score(&x, &l).unwrap();
            let b = fisher_score(&x, &l).unwrap();
            assert_eq!(a.order[0], b.order[0]);
            assert_eq!(a.order[0], 0);
        }
    }
}
