//! `nutri`: command-line front end for the nutrition-ensembles pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "nutri", version, about = "Ensemble pipeline for four-class nutritional status")]
pub struct Cli {
    /// Seed for every random choice; overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pipeline config (pipeline) or grid file (tune).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Balance only the training part of each split.
    #[arg(long, global = true)]
    pub smote_train_only: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write synthetic survey records as CSV.
    Synth(SynthArgs),
    /// Impute, encode and label a survey CSV into a dataset file.
    Prep(PrepArgs),
    /// Oversample every class to the majority count with SMOTE.
    Balance(BalanceArgs),
    /// Score features and keep a subset.
    Select(SelectArgs),
    /// Fit one model on a dataset file.
    Train(TrainArgs),
    /// Score a model on a labelled dataset file.
    Evaluate(EvaluateArgs),
    /// Grid search over stratified cross-validation.
    Tune(TuneArgs),
    /// Run the whole pipeline from a config file.
    Pipeline(PipelineArgs),
    /// Predict classes for new records.
    Predict(PredictArgs),
    /// Re-render metrics.csv and plots from a report.json.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    /// Strength of the class signal; 0 gives label-independent features.
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    /// Comma-separated class proportions (default: survey proportions).
    #[arg(long, value_delimiter = ',')]
    pub marginals: Option<Vec<f64>>,
    /// Share of feature cells left blank.
    #[arg(long)]
    pub missing_rate: Option<f64>,
    /// Generator spec file; replaces --signal and --marginals.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PrepArgs {
    /// Survey CSV.
    pub input: PathBuf,
    /// Schema file (bundled survey schema when absent).
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BalanceArgs {
    /// Dataset file.
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k_neighbors: usize,
    /// Rows per class (default: majority count).
    #[arg(long)]
    pub target: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Dataset file.
    pub input: PathBuf,
    /// sequential_backward, mutual_information, chi_square or anova_f.
    #[arg(long, default_value = "sequential_backward")]
    pub method: String,
    #[arg(long, default_value_t = 19)]
    pub target: usize,
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Trees in the backward-selection forest.
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// decision_tree, random_forest, ada_boost, gbt or oblivious_gbt.
    #[arg(long, default_value = "random_forest")]
    pub model: String,
    /// Start from the tuned parameter set instead of the defaults.
    #[arg(long)]
    pub tuned: bool,
    /// Parameter override, e.g. `--set n_estimators=200 --set tree.max_depth=8`.
    #[arg(long = "set", value_name = "NAME=JSON")]
    pub overrides: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Hold out this fraction (stratified) as holdout.json and train on the rest.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Preprocessing file from `prep`, stored with the model.
    #[arg(long)]
    pub preprocessing: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Model file.
    pub model: PathBuf,
    /// Labelled dataset file.
    pub dataset: PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Dataset file.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub cv_folds: usize,
    /// accuracy or f1_weighted.
    #[arg(long, default_value = "accuracy")]
    pub metric: String,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Also save every trained model under <out>/models/.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Raw records CSV (needs a model carrying preprocessing).
    #[arg(long, conflicts_with = "dataset")]
    pub input: Option<PathBuf>,
    /// Encoded dataset file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Schema to check the records against.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// report.json from a pipeline run.
    pub input: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
