use std::fs;
use std::path::Path;

use nutrition_ensembles::data::synth::SURVEY_MARGINALS;
use nutrition_ensembles::data::{
    encode, load_csv, BmiCutoffs, GeneratorSpec, Imputer, NutritionClass, Schema,
};
use nutrition_ensembles::ensembles::{argmax, ForestParams, ModelKind, ModelParams, Preprocessing};
use nutrition_ensembles::evaluation::{evaluate, stratified_split};
use nutrition_ensembles::pipeline::{
    confusion_svg, emit_report, load_report, predict_records, roc_svg, run_pipeline,
    write_predictions, write_timing, PipelineConfig, Prediction, RunReport, SelectionMethod,
};
use nutrition_ensembles::resampling::{smote, SmoteParams};
use nutrition_ensembles::selection::{
    anova_f, chi_square, default_sbs_estimator, mutual_information, rank_features,
    sequential_backward,
};
use nutrition_ensembles::tuning::{grid_search, GridSpec, ScoreMetric};
use nutrition_ensembles::{Dataset, Error, TrainedModel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, ModelArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    /// 1 for bad arguments or parameters, 2 for unreadable or invalid input
    /// data, 3 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_data_error() => 2,
            CliError::Lib(e) if is_param_error(e) => 1,
            CliError::Lib(_) => 3,
        }
    }
}

fn is_param_error(e: &Error) -> bool {
    match e {
        Error::InvalidParam(_) => true,
        Error::Stage { source, .. } => is_param_error(source),
        _ => false,
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    Ok(&cli.out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    write_text(path, &text)
}

fn class_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|c| match (k, NutritionClass::from_code(c)) {
            (4, Some(nc)) => nc.name().to_string(),
            _ => format!("class_{c}"),
        })
        .collect()
}

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Synth(a) => {
            let mut spec = match &a.spec {
                Some(p) => GeneratorSpec::from_path(p)?,
                None => {
                    let marginals = a.marginals.clone().unwrap_or_else(|| SURVEY_MARGINALS.to_vec());
                    GeneratorSpec::edhs_like(a.signal, &marginals)
                }
            };
            if let Some(rate) = a.missing_rate {
                spec.missing_rate = rate;
            }
            spec.validate()?;
            let dir = out_dir(cli)?;
            let csv_path = dir.join("records.csv");
            let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
            spec.write_csv(a.rows, seed, std::io::BufWriter::new(file))?;
            write_text(&dir.join("generator.json"), &spec.to_json()?)?;
            write_text(&dir.join("schema.json"), &spec.schema().to_json()?)?;
            println!("wrote {} rows to {}", a.rows, csv_path.display());
        }

        Command::Prep(a) => {
            let schema = match &a.schema {
                Some(p) => Schema::from_path(p)?,
                None => Schema::edhs(),
            };
            let table = load_csv(&a.input, &schema)?;
            let imputer = Imputer::fit(&table, &schema)?;
            let filled = imputer.apply(&table)?;
            let encoded = encode(&filled, &schema, &BmiCutoffs::default())?;
            let dir = out_dir(cli)?;
            encoded.dataset.save(dir.join("dataset.json"))?;
            write_json(&dir.join("preprocessing.json"), &Preprocessing { schema, imputer })?;
            println!(
                "{} rows read, {} missing cells imputed, {} rows dropped, {} rows kept; class counts {:?}",
                table.n_rows(),
                table.missing_count(),
                encoded.dropped_rows,
                encoded.dataset.n_rows(),
                encoded.dataset.class_counts()
            );
        }

        Command::Balance(a) => {
            let ds = Dataset::load(&a.input)?;
            let params = SmoteParams {
                k_neighbors: a.k_neighbors,
                target_per_class: a.target,
                seed,
                ..SmoteParams::default()
            };
            let out = smote(&ds, &params)?;
            out.save(out_dir(cli)?.join("balanced.json"))?;
            println!("class counts {:?} -> {:?}", ds.class_counts(), out.class_counts());
        }

        Command::Select(a) => {
            let ds = Dataset::load(&a.input)?;
            let method: SelectionMethod = serde_json::from_value(json!(a.method))
                .map_err(|_| usage(format!("unknown selection method '{}'", a.method)))?;
            let (selected, detail) = match method {
                SelectionMethod::SequentialBackward => {
                    let forest = ForestParams {
                        n_estimators: a.trees,
                        ..default_sbs_estimator()
                    };
                    let r = sequential_backward(&ds, &forest, a.target, a.cv_folds, seed)?;
                    (r.selected.clone(), serde_json::to_value(&r).map_err(Error::from)?)
                }
                _ => {
                    let scores = match method {
                        SelectionMethod::MutualInformation => mutual_information(&ds, a.bins)?,
                        SelectionMethod::ChiSquare => chi_square(&ds, a.bins)?,
                        _ => anova_f(&ds)?,
                    };
                    let mut selected = rank_features(&scores, a.target)?;
                    selected.sort_unstable();
                    (selected, json!({ "scores": scores }))
                }
            };
            let names = ds.feature_names();
            let selected_names: Vec<&String> = selected.iter().map(|&j| &names[j]).collect();
            let dir = out_dir(cli)?;
            write_json(
                &dir.join("selection.json"),
                &json!({
                    "method": method,
                    "selected": selected,
                    "selected_names": selected_names,
                    "detail": detail,
                }),
            )?;
            ds.select_features(&selected)?.save(dir.join("selected.json"))?;
            println!("kept {} of {} features", selected.len(), ds.n_features());
        }

        Command::Train(a) => {
            let ds = Dataset::load(&a.input)?;
            let params = model_params(&a.model, seed)?;
            let dir = out_dir(cli)?;
            let train = match a.holdout {
                Some(f) => {
                    let (train, test) = stratified_split(&ds, f, seed)?;
                    test.save(dir.join("holdout.json"))?;
                    train
                }
                None => ds,
            };
            let mut model = params.fit(&train)?;
            if let Some(p) = &a.preprocessing {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let pre: Preprocessing = serde_json::from_str(&text).map_err(Error::from)?;
                model = model.with_preprocessing(pre)?;
            }
            let path = dir.join("model.json");
            model.save(&path)?;
            println!("trained {} on {} rows; wrote {}", params.kind().name(), train.n_rows(), path.display());
        }

        Command::Evaluate(a) => {
            let model = TrainedModel::load(&a.model)?;
            let ds = model.align(&Dataset::load(&a.dataset)?)?;
            let k = model.n_classes;
            let ev = evaluate(ds.labels(), &model.predict_proba(&ds), k)?;
            let dir = out_dir(cli)?;
            let names = class_names(k);
            write_json(&dir.join("evaluation.json"), &ev)?;
            write_text(&dir.join("roc.svg"), &roc_svg("ROC", &ev.curves, &names))?;
            write_text(
                &dir.join("confusion.svg"),
                &confusion_svg("Confusion matrix", &ev.confusion, &names),
            )?;
            let m = &ev.metrics;
            println!(
                "accuracy {:.4}  precision_w {:.4}  recall_w {:.4}  f1_w {:.4}  roc_auc_w {}",
                m.accuracy,
                m.weighted.precision,
                m.weighted.recall,
                m.weighted.f1,
                ev.roc_auc.weighted.map_or("n/a".into(), |v| format!("{v:.4}"))
            );
        }

        Command::Tune(a) => {
            let ds = Dataset::load(&a.input)?;
            let kind = parse_kind(&a.model.model)?;
            let metric: ScoreMetric = serde_json::from_value(json!(a.metric))
                .map_err(|_| usage(format!("unknown metric '{}'", a.metric)))?;
            let mut grid = GridSpec::default_for(kind);
            if let Some(p) = &cli.config {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                grid.grid = serde_json::from_str(&text).map_err(Error::from)?;
            }
            grid.base = Some(model_params(&a.model, seed)?);
            let r = grid_search(&grid, &ds, a.cv_folds, seed, metric)?;
            write_json(&out_dir(cli)?.join("tuning.json"), &r)?;
            let best = &r.configs[r.best_index];
            println!(
                "{} configurations; best {} with mean {:.4} (std {:.4})",
                r.configs.len(),
                serde_json::to_string(&best.assignment).map_err(Error::from)?,
                best.mean,
                best.std
            );
        }

        Command::Pipeline(a) => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| usage("pipeline needs --config <file>"))?;
            let mut config = PipelineConfig::from_path(path)?;
            if let Some(s) = cli.seed {
                config.seed = s;
            }
            if cli.smote_train_only {
                config.smote_train_only = true;
                config.smote.get_or_insert_with(SmoteParams::default);
            }
            let out = run_pipeline(&config)?;
            let dir = out_dir(cli)?;
            emit_report(&out.report, dir)?;
            write_timing(&out.timing, dir)?;
            if a.save_models {
                let models = dir.join("models");
                fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
                for (label, model) in &out.models {
                    model.save(models.join(format!("{label}.json")))?;
                }
            }
            print_summary(&out.report);
            println!("wrote {}", dir.join("report.json").display());
        }

        Command::Predict(a) => {
            let schema = a.schema.as_ref().map(Schema::from_path).transpose()?;
            let (model, preds) = match (&a.input, &a.dataset) {
                (Some(csv), None) => predict_records(&a.model, csv, schema.as_ref())?,
                (None, Some(ds)) => {
                    let model = TrainedModel::load(&a.model)?;
                    let ds = model.align(&Dataset::load(ds)?)?;
                    let preds = model
                        .predict_proba(&ds)
                        .into_iter()
                        .enumerate()
                        .map(|(row_id, probabilities)| Prediction {
                            row_id,
                            class: argmax(&probabilities),
                            probabilities,
                        })
                        .collect();
                    (model, preds)
                }
                _ => return Err(usage("predict needs exactly one of --input or --dataset")),
            };
            let path = out_dir(cli)?.join("predictions.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_predictions(&preds, model.n_classes, std::io::BufWriter::new(file))?;
            println!("wrote {} predictions to {}", preds.len(), path.display());
        }

        Command::Report(a) => {
            let report = load_report(&a.input)?;
            let dir = out_dir(cli)?;
            emit_report(&report, dir)?;
            print_summary(&report);
        }
    }
    Ok(())
}

fn parse_kind(name: &str) -> Result<ModelKind> {
    ModelKind::parse(name).map_err(|e| usage(e.to_string()))
}

fn model_params(args: &ModelArgs, seed: u64) -> Result<ModelParams> {
    let kind = parse_kind(&args.model)?;
    let mut p = if args.tuned {
        ModelParams::tuned_for(kind)
    } else {
        ModelParams::default_for(kind)
    };
    for item in &args.overrides {
        let (name, raw) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects NAME=VALUE, got '{item}'")))?;
        // Bare words that are not JSON are taken as strings.
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
        p = p.set(name.trim(), &value)?;
    }
    Ok(p.with_seed(seed))
}

fn print_summary(report: &RunReport) {
    println!("{:<24} {:>6} {:>9} {:>9}", "model", "split", "accuracy", "f1_w");
    for r in &report.results {
        let m = &r.evaluation.metrics;
        println!(
            "{:<24} {:>6.2} {:>9.4} {:>9.4}",
            r.model, r.split, m.accuracy, m.weighted.f1
        );
    }
}
