use super::dataset::Dataset;
use super::labels::{label_bmi, BmiCutoffs};
use super::schema::{FeatureKind, FeatureSpec, Schema, TargetEncoding};
use super::table::RawTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Encoded {
    pub dataset: Dataset,
    /// Rows discarded because their label was missing or out of range.
    pub dropped_rows: usize,
}

fn encode_value(value: f64, spec: &FeatureSpec) -> Result<f64> {
    match spec.kind {
        FeatureKind::Numeric | FeatureKind::Nominal => Ok(value),
        FeatureKind::Ordinal => spec
            .rank_order()
            .iter()
            .position(|&code| code as f64 == value)
            .map(|rank| rank as f64)
            .ok_or_else(|| {
                Error::Data(format!(
                    "code {value} not in ordinal order of '{}'",
                    spec.name
                ))
            }),
    }
}

/// Encode the schema's feature columns of a fully imputed table into a
/// row-major matrix.
pub fn encode_features(table: &RawTable, schema: &Schema) -> Result<Vec<f64>> {
    let features = schema.features();
    let positions = features
        .iter()
        .map(|f| {
            table
                .column_index(&f.name)
                .ok_or_else(|| Error::Schema(format!("table lacks column '{}'", f.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Vec::with_capacity(table.n_rows() * features.len());
    for (i, row) in table.rows().iter().enumerate() {
        for (spec, &pos) in features.iter().zip(&positions) {
            let value = row[pos].ok_or_else(|| {
                Error::Data(format!(
                    "row {i}, column '{}' is missing; impute before encoding",
                    spec.name
                ))
            })?;
            x.push(encode_value(value, spec)?);
        }
    }
    Ok(x)
}

/// Encode features and derive labels from the schema's target column.
///
/// Ordinal features become their 0-based rank in `ordinal_order`, nominal
/// features keep their integer code and numeric features pass through.
pub fn encode(table: &RawTable, schema: &Schema, cutoffs: &BmiCutoffs) -> Result<Encoded> {
    let target = schema
        .target
        .as_ref()
        .ok_or_else(|| Error::Schema("schema declares no target column".into()))?;
    let target_pos = table
        .column_index(&target.column)
        .ok_or_else(|| Error::Schema(format!("table lacks target '{}'", target.column)))?;
    let target_spec = &schema.columns[schema.target_index().expect("validated schema")];

    let n_classes = match target.encoding {
        TargetEncoding::BmiCenti => 4,
        TargetEncoding::ClassCode => {
            let codes = target_spec.codes();
            let k = codes.len();
            if k < 2 || (0..k as i64).any(|c| !codes.contains(&c)) {
                return Err(Error::Schema(format!(
                    "class-code target '{}' must list codes 0..K-1",
                    target.column
                )));
            }
            k
        }
    };

    let x_all = encode_features(table, schema)?;
    let d = schema.feature_indices().len();
    let mut x = Vec::with_capacity(x_all.len());
    let mut y = Vec::with_capacity(table.n_rows());
    let mut dropped = 0;
    for (i, row) in table.rows().iter().enumerate() {
        let label = row[target_pos].and_then(|v| match target.encoding {
            TargetEncoding::BmiCenti => {
                if v.fract() != 0.0 {
                    return None;
                }
                label_bmi(v as i64, cutoffs).ok().map(|c| c.code())
            }
            TargetEncoding::ClassCode => Some(v as usize).filter(|&c| c < n_classes),
        });
        match label {
            Some(label) => {
                x.extend_from_slice(&x_all[i * d..(i + 1) * d]);
                y.push(label);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!(
            "dropped {dropped} row(s) with missing or out-of-range '{}'",
            target.column
        );
    }
    let dataset = Dataset::new(x, y, schema.features(), n_classes)?;
    Ok(Encoded {
        dataset,
        dropped_rows: dropped,
    })
}
