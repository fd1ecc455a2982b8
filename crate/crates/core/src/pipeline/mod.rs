//! End-to-end runs: configuration, execution, report emission and scoring of
//! new records with persisted models.

mod config;
mod predict;
mod report;
mod run;
mod svg;

pub use config::{
    DataSource, ModelSpec, PipelineConfig, Preset, SelectionConfig, SelectionMethod,
    TuningConfig, CONFIG_VERSION,
};
pub use predict::{predict_reader, predict_records, predict_table, write_predictions, Prediction};
pub use report::{
    artifact_names, emit_report, load_report, metrics_csv, write_timing, METRICS_HEADER,
};
pub use run::{
    run_pipeline, DatasetSummary, ModelResult, PipelineOutput, RunReport, SelectionReport,
    SmoteMode, Timing, REPORT_VERSION,
};
pub use svg::{confusion_svg, importance_svg, roc_svg};
