use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[t][p]` is the number of rows with true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParam("confusion matrix must be square and non-empty".into()));
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|k| self.counts[k][k]).sum()
    }

    /// Rows whose true class is `k` (the class support).
    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    /// Rows predicted as `k`.
    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidParam(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidParam(format!(
                "label pair ({t}, {p}) outside 0..{n_classes}"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// No rows were predicted as this class; precision reported as 0.
    pub precision_undefined: bool,
    /// The class has no true rows; recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Averages weighted by class support.
    pub weighted: Aggregate,
    pub macro_avg: Aggregate,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy, per-class precision/recall/F1 and their weighted and macro means.
pub fn classification_metrics(m: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::InvalidParam("confusion matrix is empty".into()));
    }
    let k = m.n_classes();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = m.counts[c][c];
            let (precision, precision_undefined) = ratio(tp, m.col_sum(c));
            let (recall, recall_undefined) = ratio(tp, m.row_sum(c));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: m.row_sum(c),
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();

    let mut weighted = Aggregate { precision: 0.0, recall: 0.0, f1: 0.0 };
    let mut macro_avg = weighted;
    for c in &per_class {
        let w = c.support as f64 / total as f64;
        weighted.precision += w * c.precision;
        weighted.recall += w * c.recall;
        weighted.f1 += w * c.f1;
        macro_avg.precision += c.precision / k as f64;
        macro_avg.recall += c.recall / k as f64;
        macro_avg.f1 += c.f1 / k as f64;
    }
    Ok(MetricsReport {
        accuracy: m.trace() as f64 / total as f64,
        per_class,
        weighted,
        macro_avg,
    })
}
