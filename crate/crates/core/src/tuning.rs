//! Grid search over stratified cross-validation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::ensembles::{ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::evaluation::{
    classification_metrics, confusion_matrix, fold_train_rows, require_class_size,
    stratified_kfold,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMetric {
    #[default]
    Accuracy,
    F1Weighted,
}

/// Score of `params` on each fold, training on the remaining folds.
pub fn cross_val_scores(
    ds: &Dataset,
    params: &ModelParams,
    folds: &[Vec<usize>],
    metric: ScoreMetric,
) -> Result<Vec<f64>> {
    (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train = ds.subset(&fold_train_rows(folds, f));
            let test = ds.subset(&folds[f]);
            let model = params.fit(&train)?;
            let cm = confusion_matrix(test.labels(), &model.predict(&test), ds.n_classes())?;
            let m = classification_metrics(&cm)?;
            Ok(match metric {
                ScoreMetric::Accuracy => m.accuracy,
                ScoreMetric::F1Weighted => m.weighted.f1,
            })
        })
        .collect()
}

/// Candidate values per parameter for one model variant. Parameter names may
/// be dotted paths into nested parameter structs, e.g. `tree.max_depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub model: ModelKind,
    /// Values not listed in `grid` come from here; defaults to the tuned
    /// parameters of `model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ModelParams>,
    pub grid: BTreeMap<String, Vec<Value>>,
}

impl GridSpec {
    /// One step below and above each tuned optimum.
    pub fn default_for(kind: ModelKind) -> Self {
        let pairs = match kind {
            ModelKind::DecisionTree => vec![
                ("tree.max_depth", json!([10, 20, null])),
                ("tree.min_samples_split", json!([2, 3, 4])),
            ],
            ModelKind::RandomForest => vec![
                ("n_estimators", json!([200, 400, 600])),
                ("tree.max_depth", json!([50, 100, 150])),
                ("tree.min_samples_split", json!([2, 3, 4])),
            ],
            ModelKind::AdaBoost => vec![
                ("n_estimators", json!([50, 100, 150])),
                ("base.max_depth", json!([20, 40, 60])),
                ("base.max_leaf_nodes", json!([100, 200, 300])),
            ],
            ModelKind::Gbt => vec![
                ("n_estimators", json!([250, 500, 750])),
                ("max_depth", json!([50, 100, 150])),
                ("learning_rate", json!([0.05, 0.1, 0.2])),
            ],
            ModelKind::ObliviousGbt => vec![
                ("iterations", json!([500, 1000, 1500])),
                ("depth", json!([6, 8, 10])),
                ("learning_rate", json!([0.05, 0.1, 0.2])),
            ],
        };
        let grid = pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.as_array().cloned().unwrap_or_default()))
            .collect();
        Self {
            model: kind,
            base: None,
            grid,
        }
    }

    fn base_params(&self) -> Result<ModelParams> {
        match &self.base {
            Some(p) if p.kind() != self.model => Err(Error::InvalidParam(format!(
                "grid base is a {} but the grid targets {}",
                p.kind().name(),
                self.model.name()
            ))),
            Some(p) => Ok(p.clone()),
            None => Ok(ModelParams::tuned_for(self.model)),
        }
    }

    /// Every configuration in enumeration order: parameter names sorted, the
    /// first name varying slowest, values in listed order.
    pub fn configurations(&self) -> Result<Vec<(BTreeMap<String, Value>, ModelParams)>> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParam("grid has no parameters".into()));
        }
        if let Some((name, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidParam(format!("grid parameter '{name}' has no values")));
        }
        let base = self.base_params()?;
        let mut out = vec![(BTreeMap::new(), base)];
        for (name, values) in &self.grid {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for (assign, params) in &out {
                for v in values {
                    let mut a = assign.clone();
                    a.insert(name.clone(), v.clone());
                    next.push((a, params.set(name, v)?));
                }
            }
            out = next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub index: usize,
    pub assignment: BTreeMap<String, Value>,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model: ModelKind,
    pub metric: ScoreMetric,
    pub cv_folds: usize,
    pub configs: Vec<ConfigScore>,
    pub best_index: usize,
    pub best_params: ModelParams,
}

/// Evaluate every grid configuration on the same stratified folds and pick
/// the highest mean score; ties go to the earliest configuration.
pub fn grid_search(
    grid: &GridSpec,
    ds: &Dataset,
    cv_folds: usize,
    seed: u64,
    metric: ScoreMetric,
) -> Result<CvResult> {
    let configs = grid.configurations()?;
    require_class_size(ds.labels(), ds.n_classes(), cv_folds)?;
    let folds = stratified_kfold(ds.labels(), ds.n_classes(), cv_folds, seed)?;
    let scored: Vec<ConfigScore> = configs
        .par_iter()
        .enumerate()
        .map(|(index, (assignment, params))| {
            let params = params.clone().with_seed(seed);
            let fold_scores = cross_val_scores(ds, &params, &folds, metric)?;
            let n = fold_scores.len() as f64;
            let mean = fold_scores.iter().sum::<f64>() / n;
            let var = fold_scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            Ok(ConfigScore {
                index,
                assignment: assignment.clone(),
                fold_scores,
                mean,
                std: var.sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for c in &scored {
        if c.mean > scored[best_index].mean {
            best_index = c.index;
        }
    }
    Ok(CvResult {
        model: grid.model,
        metric,
        cv_folds,
        best_params: configs[best_index].1.clone().with_seed(seed),
        configs: scored,
        best_index,
    })
}
