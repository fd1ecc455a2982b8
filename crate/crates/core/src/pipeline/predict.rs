use std::io::Write;
use std::path::Path;

use crate::data::{encode_features, load_features_csv, read_features_csv, RawTable, Schema};
use crate::ensembles::TrainedModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub row_id: usize,
    pub class: usize,
    pub probabilities: Vec<f64>,
}

fn check_schema(model: &TrainedModel, schema: Option<&Schema>) -> Result<Schema> {
    let pre = model.preprocessing.as_ref().ok_or_else(|| {
        Error::Data("model file carries no preprocessing; train it from a CSV source".into())
    })?;
    if let Some(given) = schema {
        if given.features() != pre.schema.features() {
            return Err(Error::Schema(
                "supplied schema's features differ from the model's training schema".into(),
            ));
        }
    }
    Ok(pre.schema.clone())
}

/// Impute with the stored training statistics, encode and predict each row
/// of a label-free table.
pub fn predict_table(model: &TrainedModel, table: &RawTable, schema: Option<&Schema>) -> Result<Vec<Prediction>> {
    let schema = check_schema(model, schema)?;
    let pre = model.preprocessing.as_ref().expect("checked above");
    let filled = pre.imputer.apply(table)?;
    let x = encode_features(&filled, &schema)?;
    let d = schema.features().len();
    if model.feature_mask.iter().any(|&j| j >= d) {
        return Err(Error::Schema("model feature mask exceeds the schema's features".into()));
    }
    Ok(x.chunks(d)
        .enumerate()
        .map(|(row_id, full)| {
            let input: Vec<f64> = model.project(full).collect();
            let probabilities = model.predict_proba_row(&input);
            Prediction {
                row_id,
                class: crate::ensembles::argmax(&probabilities),
                probabilities,
            }
        })
        .collect())
}

/// Score a CSV file of records (label column optional).
pub fn predict_records(
    model_path: impl AsRef<Path>,
    input_csv: impl AsRef<Path>,
    schema: Option<&Schema>,
) -> Result<(TrainedModel, Vec<Prediction>)> {
    let model = TrainedModel::load(model_path)?;
    let training_schema = check_schema(&model, schema)?;
    let table = load_features_csv(input_csv, &training_schema)?;
    let preds = predict_table(&model, &table, schema)?;
    Ok((model, preds))
}

/// Same as [`predict_records`] for in-memory CSV.
pub fn predict_reader<R: std::io::Read>(model: &TrainedModel, reader: R) -> Result<Vec<Prediction>> {
    let schema = check_schema(model, None)?;
    let table = read_features_csv(reader, &schema)?;
    predict_table(model, &table, None)
}

/// `row_id,predicted_class,prob_0..prob_{K-1}`.
pub fn write_predictions<W: Write>(preds: &[Prediction], n_classes: usize, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["row_id".to_string(), "predicted_class".to_string()];
    header.extend((0..n_classes).map(|k| format!("prob_{k}")));
    wtr.write_record(&header)?;
    for p in preds {
        let mut rec = vec![p.row_id.to_string(), p.class.to_string()];
        rec.extend(p.probabilities.iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}
