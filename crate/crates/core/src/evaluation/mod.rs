//! Stratified splitting and cross-validation folds, confusion matrices, the
//! classification metric suite and one-vs-rest ROC analysis.

mod metrics;
mod roc;
mod split;

pub use metrics::{
    classification_metrics, confusion_matrix, Aggregate, ClassMetrics, ConfusionMatrix,
    MetricsReport,
};
pub use roc::{binary_auc, roc_auc_ovr, roc_curve_points, trapezoid_area, RocAuc, RocCurve};
pub use split::{fold_train_rows, require_class_size, stratified_kfold, stratified_split, stratified_split_indices};

use serde::{Deserialize, Serialize};

use crate::ensembles::argmax;
use crate::error::Result;

/// Everything computed for one model on one labelled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub roc_auc: RocAuc,
    pub curves: Vec<RocCurve>,
}

/// Score predicted probabilities against true labels. Predictions are the
/// argmax of each probability row.
pub fn evaluate(y_true: &[usize], probas: &[Vec<f64>], n_classes: usize) -> Result<Evaluation> {
    let y_pred: Vec<usize> = probas.iter().map(|p| argmax(p)).collect();
    let confusion = confusion_matrix(y_true, &y_pred, n_classes)?;
    let metrics = classification_metrics(&confusion)?;
    let roc_auc = roc_auc_ovr(y_true, probas, n_classes)?;
    let curves = (0..n_classes)
        .map(|k| {
            let scores: Vec<f64> = probas.iter().map(|p| p[k]).collect();
            roc_curve_points(y_true, &scores, k)
        })
        .collect();
    Ok(Evaluation {
        confusion,
        metrics,
        roc_auc,
        curves,
    })
}
