use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, SelectionMethod};
use crate::data::{
    encode, load_csv, read_csv, ClassDistribution, Imputer, NutritionClass, Schema,
};
use crate::ensembles::{ModelKind, ModelParams, Preprocessing, TrainedModel};
use crate::error::{Result, StageContext};
use crate::evaluation::{evaluate, stratified_split, Evaluation};
use crate::resampling::{smote, SmoteParams};
use crate::selection::{
    anova_f, chi_square, mutual_information, rank_features, sequential_backward, FeatureScore,
    SbsStep,
};
use crate::tuning::{grid_search, CvResult};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub rows_read: usize,
    /// Rows dropped for a missing or implausible label value.
    pub rows_dropped: usize,
    pub rows: usize,
    pub features: Vec<String>,
    pub missing_cells: usize,
    pub invalid_cells: usize,
    pub n_classes: usize,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoteMode {
    Disabled,
    BeforeSplit,
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: SelectionMethod,
    pub mutual_information: Vec<FeatureScore>,
    pub chi_square: Vec<FeatureScore>,
    pub anova_f: Vec<FeatureScore>,
    /// Selected indices into the full feature list, ascending.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbs_trace: Option<Vec<SbsStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbs_initial_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub kind: ModelKind,
    /// Test fraction of the split.
    pub split: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub tuned: bool,
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvResult>,
    pub evaluation: Evaluation,
    pub feature_importance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub seed: u64,
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub class_distribution: ClassDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_distribution_balanced: Option<ClassDistribution>,
    pub smote_mode: SmoteMode,
    /// Data the grid search was run on.
    pub grid_search_scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
    /// Names of the features the models were trained on.
    pub model_features: Vec<String>,
    pub results: Vec<ModelResult>,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
}

/// Wall-clock seconds per stage. Kept out of the report so the report is a
/// pure function of (data, config, seed).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

pub struct PipelineOutput {
    pub report: RunReport,
    pub timing: Timing,
    /// The model of each spec fitted at the last split, ready to persist.
    pub models: Vec<(String, TrainedModel)>,
}

struct Clock {
    start: Instant,
    last: Instant,
    timing: Timing,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            timing: Timing::default(),
        }
    }

    fn lap(&mut self, stage: impl Into<String>) {
        let now = Instant::now();
        self.timing
            .stages
            .push((stage.into(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(mut self) -> Timing {
        self.timing.total_seconds = self.start.elapsed().as_secs_f64();
        self.timing
    }
}

fn class_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|c| match (k, NutritionClass::from_code(c)) {
            (4, Some(nc)) => nc.name().to_string(),
            _ => format!("class_{c}"),
        })
        .collect()
}

fn same_fraction(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Run load, impute, encode/label, optional SMOTE, optional selection and
/// then split/tune/train/evaluate for every configured split and model.
/// Every random choice derives from `config.seed`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate().stage("config")?;
    let seed = config.seed;
    let mut clock = Clock::new();

    let (schema, table, source) = match &config.data {
        super::DataSource::Csv { path, schema } => {
            let schema = match schema {
                Some(p) => Schema::from_path(p).stage("load")?,
                None => Schema::edhs(),
            };
            let table = load_csv(path, &schema).stage("load")?;
            (schema, table, format!("csv:{}", path.display()))
        }
        src @ super::DataSource::Generator { n_rows, .. } => {
            let g = src.generator().stage("load")?.expect("generator source");
            let mut bytes = Vec::new();
            g.write_csv(*n_rows, seed, &mut bytes).stage("load")?;
            let schema = g.schema();
            let table = read_csv(bytes.as_slice(), &schema).stage("load")?;
            (schema, table, format!("generator:{n_rows} rows"))
        }
    };
    clock.lap("load");

    let imputer = Imputer::fit(&table, &schema).stage("impute")?;
    let table_imputed = imputer.apply(&table).stage("impute")?;
    clock.lap("impute");
    let encoded = encode(&table_imputed, &schema, &config.cutoffs).stage("encode")?;
    clock.lap("encode");
    let mut ds = encoded.dataset;
    let k = ds.n_classes();

    let dataset = DatasetSummary {
        source,
        rows_read: table.n_rows(),
        rows_dropped: encoded.dropped_rows,
        rows: ds.n_rows(),
        features: ds.feature_names(),
        missing_cells: table.missing_count(),
        invalid_cells: table.invalid_counts().iter().sum(),
        n_classes: k,
        class_names: class_names(k),
    };
    let class_distribution = ds.class_distribution();

    let smote_params = config.smote.clone().map(|p| SmoteParams { seed, ..p });
    let smote_mode = match (&smote_params, config.smote_train_only) {
        (None, _) => SmoteMode::Disabled,
        (Some(_), false) => SmoteMode::BeforeSplit,
        (Some(_), true) => SmoteMode::TrainOnly,
    };
    let mut class_distribution_balanced = None;
    if let (Some(p), SmoteMode::BeforeSplit) = (&smote_params, &smote_mode) {
        ds = smote(&ds, p).stage("balance")?;
        class_distribution_balanced = Some(ds.class_distribution());
        clock.lap("balance");
    }

    let mut selection = None;
    if let Some(sel) = &config.selection {
        let mi = mutual_information(&ds, sel.bins).stage("select")?;
        let chi = chi_square(&ds, sel.bins).stage("select")?;
        let anova = anova_f(&ds).stage("select")?;
        let (mut selected, trace, initial) = match sel.method {
            SelectionMethod::SequentialBackward => {
                let r = sequential_backward(&ds, &sel.estimator, sel.target_size, sel.cv_folds, seed)
                    .stage("select")?;
                (r.selected, Some(r.trace), Some(r.initial_accuracy))
            }
            SelectionMethod::MutualInformation => {
                (rank_features(&mi, sel.target_size).stage("select")?, None, None)
            }
            SelectionMethod::ChiSquare => {
                (rank_features(&chi, sel.target_size).stage("select")?, None, None)
            }
            SelectionMethod::AnovaF => {
                (rank_features(&anova, sel.target_size).stage("select")?, None, None)
            }
        };
        selected.sort_unstable();
        let names = ds.feature_names();
        ds = ds.select_features(&selected).stage("select")?;
        selection = Some(SelectionReport {
            method: sel.method,
            mutual_information: mi,
            chi_square: chi,
            anova_f: anova,
            selected_names: selected.iter().map(|&j| names[j].clone()).collect(),
            selected,
            sbs_trace: trace,
            sbs_initial_accuracy: initial,
        });
        clock.lap("select");
    }

    let preprocessing = Preprocessing {
        schema: schema.clone(),
        imputer,
    };
    let mut results = Vec::new();
    let mut models: Vec<(String, TrainedModel)> = Vec::new();
    for &fraction in &config.splits {
        let (mut train, test) = stratified_split(&ds, fraction, seed).stage("split")?;
        if let (Some(p), SmoteMode::TrainOnly) = (&smote_params, &smote_mode) {
            train = smote(&train, p).stage("balance")?;
        }
        for spec in &config.models {
            let label = spec.label();
            let tune = config.tuning.as_ref().filter(|t| {
                t.splits.is_empty() || t.splits.iter().any(|&s| same_fraction(s, fraction))
            });
            let (params, cv) = match tune {
                Some(t) => {
                    let grid = spec.grid_spec(seed).stage("tune")?;
                    let r = grid_search(&grid, &train, t.cv_folds, seed, t.metric).stage("tune")?;
                    (r.best_params.clone(), Some(r))
                }
                None => (spec.params(seed).stage("train")?, None),
            };
            let model = params.fit(&train).stage("train")?;
            let probas = model.predict_proba(&test);
            let evaluation = evaluate(test.labels(), &probas, k).stage("evaluate")?;
            log::info!(
                "{label} @ test {fraction}: accuracy {:.4}",
                evaluation.metrics.accuracy
            );
            results.push(ModelResult {
                model: label.clone(),
                kind: spec.model,
                split: fraction,
                train_rows: train.n_rows(),
                test_rows: test.n_rows(),
                tuned: cv.is_some(),
                params,
                cv,
                evaluation,
                feature_importance: model.feature_importance(),
            });
            let model = model
                .with_preprocessing(preprocessing.clone())
                .stage("train")?;
            models.retain(|(l, _)| *l != label);
            models.push((label.clone(), model));
            clock.lap(format!("{label}@{fraction}"));
        }
    }

    let report = RunReport {
        report_version: REPORT_VERSION,
        seed,
        config: config.clone(),
        dataset,
        class_distribution,
        class_distribution_balanced,
        smote_mode,
        grid_search_scope: "training split".into(),
        selection,
        model_features: ds.feature_names(),
        artifacts: super::report::artifact_names(&results),
        results,
    };
    Ok(PipelineOutput {
        report,
        timing: clock.finish(),
        models,
    })
}
