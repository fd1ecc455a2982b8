//! The uniform model contract and its versioned JSON persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::adaboost::{fit_adaboost, AdaBoost, AdaBoostParams};
use super::forest::{fit_random_forest, ForestParams, RandomForest};
use super::gbt::{fit_gbt, GbtParams, GradientBoosted};
use super::oblivious::{fit_oblivious_gbt, ObliviousBoosted, ObliviousParams};
use super::tree::{fit_tree, DecisionTree, TreeParams};
use super::{argmax, normalize};
use crate::data::{Dataset, Imputer, Schema};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    AdaBoost,
    Gbt,
    ObliviousGbt,
}

impl ModelKind {
    /// The four ensemble variants compared by the pipeline.
    pub const ENSEMBLES: [ModelKind; 4] = [
        ModelKind::RandomForest,
        ModelKind::AdaBoost,
        ModelKind::Gbt,
        ModelKind::ObliviousGbt,
    ];

    pub const ALL: [ModelKind; 5] = [
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::AdaBoost,
        ModelKind::Gbt,
        ModelKind::ObliviousGbt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::AdaBoost => "ada_boost",
            ModelKind::Gbt => "gbt",
            ModelKind::ObliviousGbt => "oblivious_gbt",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        [
            ModelKind::DecisionTree,
            ModelKind::RandomForest,
            ModelKind::AdaBoost,
            ModelKind::Gbt,
            ModelKind::ObliviousGbt,
        ]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::InvalidParam(format!("unknown model '{name}'")))
    }
}

/// Hyperparameters of one model variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    DecisionTree {
        #[serde(default)]
        tree: TreeParams,
        #[serde(default)]
        seed: u64,
    },
    RandomForest(ForestParams),
    AdaBoost(AdaBoostParams),
    Gbt(GbtParams),
    ObliviousGbt(ObliviousParams),
}

impl ModelParams {
    /// Library defaults (untuned configuration).
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::DecisionTree => ModelParams::DecisionTree {
                tree: TreeParams::default(),
                seed: 0,
            },
            ModelKind::RandomForest => ModelParams::RandomForest(ForestParams::default()),
            ModelKind::AdaBoost => ModelParams::AdaBoost(AdaBoostParams::default()),
            ModelKind::Gbt => ModelParams::Gbt(GbtParams::default()),
            ModelKind::ObliviousGbt => ModelParams::ObliviousGbt(ObliviousParams::default()),
        }
    }

    /// Tuned optima.
    pub fn tuned_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::DecisionTree => Self::default_for(kind),
            ModelKind::RandomForest => ModelParams::RandomForest(ForestParams::tuned()),
            ModelKind::AdaBoost => ModelParams::AdaBoost(AdaBoostParams::tuned()),
            ModelKind::Gbt => ModelParams::Gbt(GbtParams::tuned()),
            ModelKind::ObliviousGbt => ModelParams::ObliviousGbt(ObliviousParams::tuned()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::DecisionTree { .. } => ModelKind::DecisionTree,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::AdaBoost(_) => ModelKind::AdaBoost,
            ModelParams::Gbt(_) => ModelKind::Gbt,
            ModelParams::ObliviousGbt(_) => ModelKind::ObliviousGbt,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelParams::DecisionTree { seed, .. } => *seed,
            ModelParams::RandomForest(p) => p.seed,
            ModelParams::AdaBoost(p) => p.seed,
            ModelParams::Gbt(p) => p.seed,
            ModelParams::ObliviousGbt(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, value: u64) -> Self {
        match &mut self {
            ModelParams::DecisionTree { seed, .. } => *seed = value,
            ModelParams::RandomForest(p) => p.seed = value,
            ModelParams::AdaBoost(p) => p.seed = value,
            ModelParams::Gbt(p) => p.seed = value,
            ModelParams::ObliviousGbt(p) => p.seed = value,
        }
        self
    }

    /// The parameters as a JSON object, without the variant tag.
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("params serialize");
        v["params"].take()
    }

    /// Set a parameter by name. Nested fields use dots, e.g. `tree.max_depth`.
    /// The name must already exist in the serialized parameters.
    pub fn set(&self, name: &str, value: &Value) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        let mut slot = &mut doc["params"];
        for part in name.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| {
                    Error::InvalidParam(format!(
                        "'{name}' is not a parameter of {}",
                        self.kind().name()
                    ))
                })?;
        }
        *slot = value.clone();
        serde_json::from_value(doc).map_err(|e| {
            Error::InvalidParam(format!("bad value {value} for '{name}': {e}"))
        })
    }

    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel> {
        let ensemble = match self {
            ModelParams::DecisionTree { tree, seed } => {
                Ensemble::DecisionTree(fit_tree(ds, &vec![1.0; ds.n_rows()], tree, *seed)?)
            }
            ModelParams::RandomForest(p) => Ensemble::RandomForest(fit_random_forest(ds, p)?),
            ModelParams::AdaBoost(p) => Ensemble::AdaBoost(fit_adaboost(ds, p)?),
            ModelParams::Gbt(p) => Ensemble::Gbt(fit_gbt(ds, p)?),
            ModelParams::ObliviousGbt(p) => Ensemble::ObliviousGbt(fit_oblivious_gbt(ds, p)?),
        };
        Ok(TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            params: self.clone(),
            n_classes: ds.n_classes(),
            feature_names: ds.feature_names(),
            feature_mask: (0..ds.n_features()).collect(),
            preprocessing: None,
            ensemble,
        })
    }
}

/// Training-time input handling stored with a model so raw records can be
/// scored without the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub schema: Schema,
    pub imputer: Imputer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Ensemble {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    AdaBoost(AdaBoost),
    Gbt(GradientBoosted),
    ObliviousGbt(ObliviousBoosted),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub params: ModelParams,
    pub n_classes: usize,
    /// Names of the model's input columns, in order.
    pub feature_names: Vec<String>,
    /// Position of each input column within the schema's full feature list.
    pub feature_mask: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocessing: Option<Preprocessing>,
    pub ensemble: Ensemble,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Class probabilities for one row in model-input column order.
    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        match &self.ensemble {
            Ensemble::DecisionTree(t) => t.predict_proba_row(x),
            Ensemble::RandomForest(m) => m.predict_proba_row(x),
            Ensemble::AdaBoost(m) => m.predict_proba_row(x),
            Ensemble::Gbt(m) => m.predict_proba_row(x),
            Ensemble::ObliviousGbt(m) => m.predict_proba_row(x),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba_row(x))
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        (0..ds.n_rows()).map(|i| self.predict_proba_row(ds.row(i))).collect()
    }

    pub fn predict(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.n_rows()).map(|i| self.predict_row(ds.row(i))).collect()
    }

    /// Record which columns of the full feature list the model consumes.
    pub fn with_feature_mask(mut self, mask: Vec<usize>) -> Result<Self> {
        if mask.len() != self.n_features() {
            return Err(Error::InvalidParam(format!(
                "feature mask has {} entries but the model has {} inputs",
                mask.len(),
                self.n_features()
            )));
        }
        self.feature_mask = mask;
        Ok(self)
    }

    /// Attach training-time preprocessing. The feature mask is rebuilt from
    /// the model's input names, which must all be schema features.
    pub fn with_preprocessing(mut self, preprocessing: Preprocessing) -> Result<Self> {
        let names: Vec<String> = preprocessing
            .schema
            .features()
            .into_iter()
            .map(|f| f.name)
            .collect();
        self.feature_mask = self
            .feature_names
            .iter()
            .map(|name| {
                names.iter().position(|n| n == name).ok_or_else(|| {
                    Error::Schema(format!("model input '{name}' is not a schema feature"))
                })
            })
            .collect::<Result<_>>()?;
        self.preprocessing = Some(preprocessing);
        Ok(self)
    }

    /// The columns of `ds` this model consumes, in model order, looked up by
    /// name.
    pub fn align(&self, ds: &Dataset) -> Result<Dataset> {
        let names = ds.feature_names();
        let cols = self
            .feature_names
            .iter()
            .map(|name| {
                names.iter().position(|n| n == name).ok_or_else(|| {
                    Error::Schema(format!("dataset lacks model input '{name}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if ds.n_classes() != self.n_classes {
            return Err(Error::Data(format!(
                "dataset has {} classes, model expects {}",
                ds.n_classes(),
                self.n_classes
            )));
        }
        ds.select_features(&cols)
    }

    /// Pick the model inputs out of a row holding every schema feature.
    pub fn project<'a>(&'a self, full_row: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.feature_mask.iter().map(move |&j| full_row[j])
    }

    pub fn feature_importance(&self) -> Vec<f64> {
        let raw = match &self.ensemble {
            Ensemble::DecisionTree(t) => t.raw_importance(),
            Ensemble::RandomForest(m) => m.raw_importance(),
            Ensemble::AdaBoost(m) => m.raw_importance(),
            Ensemble::Gbt(m) => m.raw_importance(),
            Ensemble::ObliviousGbt(m) => m.raw_importance(),
        };
        normalize(raw)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        if model.feature_mask.len() != model.feature_names.len() {
            return Err(Error::Data("model feature mask and names disagree".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Normalised per-feature importance; all-zero importance becomes uniform.
pub fn feature_importance(model: &TrainedModel) -> Vec<f64> {
    model.feature_importance()
}
