//! Confusion counts and the accuracy ratio `(TP+TN)/(TP+FN+TN+FP)`.
//!
//! Multi-class evaluations fill the full per-class confusion matrix and pool
//! one-vs-rest counts on a designated positive class (for binary
//! malware/benign tasks the positive class is the malware label).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    /// Sorted distinct class labels; indexes the confusion matrix.
    pub classes: Vec<String>,
    /// Index of the designated positive class in `classes`.
    pub positive: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Row-major m x m matrix; entry (true, predicted).
    pub per_class: Vec<usize>,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn matrix_entry(&self, true_class: usize, predicted_class: usize) -> usize {
        self.per_class[true_class * self.classes.len() + predicted_class]
    }
}

/// Count confusion entries against an explicit class list.
///
/// Every label in `truth` and `predicted` must appear in `classes`.
pub fn confusion_with_classes(
    truth: &[String],
    predicted: &[String],
    classes: &[String],
    positive_class: &str,
) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() || truth.is_empty() {
        return Err(Error::shape(
            "confusion",
            format!(
                "{} true labels vs {} predictions (need equal, >= 1)",
                truth.len(),
                predicted.len()
            ),
        ));
    }
    let index_of = |label: &str| -> Result<usize> {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::Data(format!("unknown class `{label}`")))
    };
    let positive = index_of(positive_class)?;
    let m = classes.len();
    let mut per_class = vec![0usize; m * m];
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (t, p) in truth.iter().zip(predicted) {
        let ti = index_of(t)?;
        let pi = index_of(p)?;
        per_class[ti * m + pi] += 1;
        match (ti == positive, pi == positive) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    Ok(ConfusionCounts {
        classes: classes.to_vec(),
        positive,
        tp,
        tn,
        fp,
        fn_,
        per_class,
    })
}

/// Count confusion entries, deriving the class list from the labels seen.
pub fn confusion(
    truth: &[String],
    predicted: &[String],
    positive_class: &str,
) -> Result<ConfusionCounts> {
    let mut classes: Vec<String> = truth.iter().chain(predicted).cloned().collect();
    classes.sort();
    classes.dedup();
    confusion_with_classes(truth, predicted, &classes, positive_class)
}

/// Accuracy ratio `(TP+TN)/(TP+FN+TN+FP)`, in [0, 1].
pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Numeric("accuracy of zero evaluated samples".into()));
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}
