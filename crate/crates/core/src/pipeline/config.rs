use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::synth::SURVEY_MARGINALS;
use crate::data::{BmiCutoffs, GeneratorSpec};
use crate::ensembles::{ForestParams, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::resampling::SmoteParams;
use crate::selection::{default_sbs_estimator, DEFAULT_BINS};
use crate::tuning::{GridSpec, ScoreMetric};

pub const CONFIG_VERSION: u32 = 1;

/// Where the raw records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    /// A survey CSV described by a schema file (bundled schema when absent).
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<PathBuf>,
    },
    /// Rows drawn from a generator spec file, or from the built-in survey-like
    /// generator with the given signal and class marginals.
    Generator {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<PathBuf>,
        #[serde(default = "default_signal")]
        signal: f64,
        #[serde(default = "survey_marginals")]
        marginals: Vec<f64>,
        #[serde(default)]
        missing_rate: f64,
        n_rows: usize,
    },
}

fn default_signal() -> f64 {
    1.0
}

fn survey_marginals() -> Vec<f64> {
    SURVEY_MARGINALS.to_vec()
}

impl DataSource {
    /// Resolve relative paths against the config file's directory.
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match self {
            DataSource::Csv { path, schema } => {
                fix(path);
                if let Some(s) = schema {
                    fix(s);
                }
            }
            DataSource::Generator { spec: Some(s), .. } => fix(s),
            DataSource::Generator { .. } => {}
        }
    }

    pub fn generator(&self) -> Result<Option<GeneratorSpec>> {
        match self {
            DataSource::Csv { .. } => Ok(None),
            DataSource::Generator {
                spec,
                signal,
                marginals,
                missing_rate,
                ..
            } => {
                let mut g = match spec {
                    Some(path) => GeneratorSpec::from_path(path)?,
                    None => GeneratorSpec::edhs_like(*signal, marginals),
                };
                if *missing_rate > 0.0 {
                    g.missing_rate = *missing_rate;
                }
                g.validate()?;
                Ok(Some(g))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    SequentialBackward,
    MutualInformation,
    ChiSquare,
    AnovaF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub method: SelectionMethod,
    #[serde(default = "default_target")]
    pub target_size: usize,
    #[serde(default = "default_sbs_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_sbs_estimator")]
    pub estimator: ForestParams,
}

fn default_target() -> usize {
    19
}
fn default_sbs_folds() -> usize {
    5
}
fn default_bins() -> usize {
    DEFAULT_BINS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Default,
    Tuned,
}

/// One model to train at every split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub preset: Preset,
    /// Individual parameter overrides by (dotted) name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Value>,
    /// Grid searched when tuning is enabled; the default grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<BTreeMap<String, Vec<Value>>>,
    /// Name used in reports and file names; derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ModelSpec {
    pub fn new(model: ModelKind, preset: Preset) -> Self {
        Self {
            model,
            preset,
            overrides: BTreeMap::new(),
            grid: None,
            label: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match self.preset {
            Preset::Default => self.model.name().to_string(),
            Preset::Tuned => format!("{}_tuned", self.model.name()),
        })
    }

    pub fn params(&self, seed: u64) -> Result<ModelParams> {
        let mut p = match self.preset {
            Preset::Default => ModelParams::default_for(self.model),
            Preset::Tuned => ModelParams::tuned_for(self.model),
        };
        for (name, value) in &self.overrides {
            p = p.set(name, value)?;
        }
        Ok(p.with_seed(seed))
    }

    pub fn grid_spec(&self, seed: u64) -> Result<GridSpec> {
        let mut g = GridSpec::default_for(self.model);
        if let Some(grid) = &self.grid {
            g.grid = grid.clone();
        }
        g.base = Some(self.params(seed)?);
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub metric: ScoreMetric,
    /// Test fractions at which grid search runs; every split when empty.
    #[serde(default = "default_tuned_splits")]
    pub splits: Vec<f64>,
}

fn default_cv_folds() -> usize {
    10
}
fn default_tuned_splits() -> Vec<f64> {
    vec![0.2]
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            cv_folds: default_cv_folds(),
            metric: ScoreMetric::Accuracy,
            splits: default_tuned_splits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    pub data: DataSource,
    #[serde(default)]
    pub cutoffs: BmiCutoffs,
    /// Balancing parameters; no balancing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smote: Option<SmoteParams>,
    /// Balance only the training part of each split.
    #[serde(default)]
    pub smote_train_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionConfig>,
    /// Test fractions.
    #[serde(default = "default_splits")]
    pub splits: Vec<f64>,
    pub models: Vec<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

fn default_splits() -> Vec<f64> {
    vec![0.30, 0.25, 0.20]
}

impl PipelineConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            config.data.rebase(dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidParam(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.splits.is_empty() {
            return Err(Error::InvalidParam("config lists no splits".into()));
        }
        if let Some(f) = self.splits.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::InvalidParam(format!("split fraction {f} outside (0, 1)")));
        }
        self.cutoffs.validate()?;
        let mut labels = std::collections::BTreeSet::new();
        for m in &self.models {
            m.params(self.seed)?;
            if !labels.insert(m.label()) {
                return Err(Error::InvalidParam(format!("duplicate model label '{}'", m.label())));
            }
        }
        if self.smote_train_only && self.smote.is_none() {
            return Err(Error::InvalidParam("smote_train_only requires smote parameters".into()));
        }
        Ok(())
    }

    /// Four ensembles at the three standard splits on the built-in generator.
    pub fn standard(n_rows: usize, preset: Preset) -> Self {
        Self {
            version: CONFIG_VERSION,
            data: DataSource::Generator {
                spec: None,
                signal: default_signal(),
                marginals: survey_marginals(),
                missing_rate: 0.0,
                n_rows,
            },
            cutoffs: BmiCutoffs::default(),
            smote: Some(SmoteParams::default()),
            smote_train_only: false,
            selection: None,
            splits: default_splits(),
            models: ModelKind::ENSEMBLES
                .iter()
                .map(|&k| ModelSpec::new(k, preset))
                .collect(),
            tuning: None,
            seed: 0,
        }
    }
}
