use std::fs;
use std::path::{Path, PathBuf};

use super::run::{ModelResult, RunReport, Timing};
use super::svg::{confusion_svg, importance_svg, roc_svg};
use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 7] = [
    "model",
    "split",
    "accuracy",
    "precision_w",
    "recall_w",
    "f1_w",
    "roc_auc_w",
];

/// Model labels in first-appearance order.
fn labels(results: &[ModelResult]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in results {
        if !out.contains(&r.model.as_str()) {
            out.push(&r.model);
        }
    }
    out
}

/// File names [`emit_report`] writes besides `report.json`.
pub fn artifact_names(results: &[ModelResult]) -> Vec<String> {
    let mut names = vec!["metrics.csv".to_string()];
    for label in labels(results) {
        names.push(format!("roc_{label}.svg"));
        names.push(format!("confusion_{label}.svg"));
        names.push(format!("importance_{label}.svg"));
    }
    names
}

/// Numbers are written with the same formatter as the JSON report, so the
/// CSV and JSON agree digit for digit.
fn num(v: f64) -> Result<String> {
    Ok(serde_json::to_string(&v)?)
}

pub fn metrics_csv(report: &RunReport) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(METRICS_HEADER)?;
    for r in &report.results {
        let m = &r.evaluation.metrics;
        let auc = match r.evaluation.roc_auc.weighted {
            Some(a) => num(a)?,
            None => String::new(),
        };
        wtr.write_record([
            r.model.clone(),
            num(r.split)?,
            num(m.accuracy)?,
            num(m.weighted.precision)?,
            num(m.weighted.recall)?,
            num(m.weighted.f1)?,
            auc,
        ])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::io("<metrics.csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write `report.json`, `metrics.csv` and, per model, ROC, confusion and
/// importance SVGs for its last split. Returns the written paths.
pub fn emit_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![write(dir, "report.json", &serde_json::to_string_pretty(report)?)?];
    written.push(write(dir, "metrics.csv", &metrics_csv(report)?)?);

    let classes = &report.dataset.class_names;
    for label in labels(&report.results) {
        let r = report
            .results
            .iter()
            .rev()
            .find(|r| r.model == label)
            .expect("label comes from results");
        let pct = (r.split * 100.0).round();
        let title = format!("{label} ({}/{pct} split)", 100.0 - pct);
        written.push(write(
            dir,
            &format!("roc_{label}.svg"),
            &roc_svg(&format!("ROC, {title}"), &r.evaluation.curves, classes),
        )?);
        written.push(write(
            dir,
            &format!("confusion_{label}.svg"),
            &confusion_svg(&format!("Confusion matrix, {title}"), &r.evaluation.confusion, classes),
        )?);
        written.push(write(
            dir,
            &format!("importance_{label}.svg"),
            &importance_svg(
                &format!("Feature importance, {label}"),
                &report.model_features,
                &r.feature_importance,
            ),
        )?);
    }
    Ok(written)
}

pub fn write_timing(timing: &Timing, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    write(out_dir.as_ref(), "timing.json", &serde_json::to_string_pretty(timing)?)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
