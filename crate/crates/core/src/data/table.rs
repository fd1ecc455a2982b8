use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnRole, FeatureSpec, Schema};
use crate::error::{Error, Result};

/// Parsed CSV cells laid out in schema column order; `None` marks a missing
/// cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
    invalid_counts: Vec<usize>,
}

impl RawTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let unique: HashSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(Error::Data("duplicate column names".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Data(format!(
                "row {i} has {} cells, expected {}",
                rows[i].len(),
                columns.len()
            )));
        }
        let invalid_counts = vec![0; columns.len()];
        Ok(Self {
            columns,
            rows,
            invalid_counts,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cells demoted to missing because they failed to parse or held a code
    /// outside `valid_codes`, per column.
    pub fn invalid_counts(&self) -> &[usize] {
        &self.invalid_counts
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }
}

/// Parse one cell per the column kind; `Err(())` flags an invalid token.
fn parse_cell(raw: &str, spec: &FeatureSpec) -> std::result::Result<Option<f64>, ()> {
    let token = raw.trim();
    if token.is_empty() {
        return Ok(None);
    }
    let value: f64 = token.parse().map_err(|_| ())?;
    if !value.is_finite() {
        return Err(());
    }
    if spec.is_categorical() {
        if value.fract() != 0.0 || !spec.codes().contains(&(value as i64)) {
            return Err(());
        }
    }
    Ok(Some(value))
}

fn read_table<R: Read>(reader: R, wanted: &[&FeatureSpec], optional: &[&str]) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let wanted_names: HashSet<&str> = wanted.iter().map(|s| s.name.as_str()).collect();
    let missing: Vec<&str> = wanted
        .iter()
        .map(|s| s.name.as_str())
        .filter(|n| !header.iter().any(|h| h == n))
        .collect();
    let extra: Vec<&str> = header
        .iter()
        .map(String::as_str)
        .filter(|h| !wanted_names.contains(h) && !optional.contains(h))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Schema(format!(
            "CSV header does not match schema; missing: [{}], unexpected: [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Schema(format!("duplicate CSV column '{dup}'")));
    }

    let positions: Vec<usize> = wanted
        .iter()
        .map(|s| header.iter().position(|h| h == &s.name).unwrap())
        .collect();
    let mut invalid_counts = vec![0usize; wanted.len()];
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = positions
            .iter()
            .zip(wanted)
            .enumerate()
            .map(|(c, (&pos, spec))| {
                parse_cell(record.get(pos).unwrap_or(""), spec).unwrap_or_else(|()| {
                    invalid_counts[c] += 1;
                    None
                })
            })
            .collect();
        rows.push(row);
    }
    for (spec, &count) in wanted.iter().zip(&invalid_counts) {
        if count > 0 {
            log::warn!(
                "column '{}': {count} invalid cell(s) treated as missing",
                spec.name
            );
        }
    }
    Ok(RawTable {
        columns: wanted.iter().map(|s| s.name.clone()).collect(),
        rows,
        invalid_counts,
    })
}

/// Read a CSV holding every schema column (header order is free).
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    let wanted: Vec<&FeatureSpec> = schema.columns.iter().collect();
    read_table(reader, &wanted, &[])
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Read a CSV of records to score: all non-target columns are required, the
/// target column may be present and is ignored.
pub fn read_features_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    let wanted: Vec<&FeatureSpec> = schema
        .columns
        .iter()
        .filter(|c| c.role != ColumnRole::Target)
        .collect();
    let optional: Vec<&str> = schema
        .columns
        .iter()
        .filter(|c| c.role == ColumnRole::Target)
        .map(|c| c.name.as_str())
        .collect();
    read_table(reader, &wanted, &optional)
}

/// [`read_features_csv`] from a file.
pub fn load_features_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_features_csv(file, schema)
}

/// Column fill values learned from training data: mean for numeric columns,
/// mode (smallest code on ties) for categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub fills: BTreeMap<String, f64>,
}

impl Imputer {
    /// Learn fills for every feature column of `schema` present in `table`.
    pub fn fit(table: &RawTable, schema: &Schema) -> Result<Self> {
        let mut fills = BTreeMap::new();
        for spec in schema.columns.iter().filter(|c| c.role == ColumnRole::Feature) {
            let Some(c) = table.column_index(&spec.name) else {
                continue;
            };
            let observed: Vec<f64> = table.rows.iter().filter_map(|r| r[c]).collect();
            if observed.is_empty() {
                return Err(Error::Data(format!(
                    "column '{}' has no observed values to impute from",
                    spec.name
                )));
            }
            let fill = if spec.is_categorical() {
                let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                for v in &observed {
                    *counts.entry(*v as i64).or_default() += 1;
                }
                // BTreeMap iterates codes ascending; keep the first maximum.
                let (code, _) = counts
                    .iter()
                    .fold((0i64, 0usize), |best, (&code, &n)| {
                        if n > best.1 { (code, n) } else { best }
                    });
                code as f64
            } else {
                observed.iter().sum::<f64>() / observed.len() as f64
            };
            fills.insert(spec.name.clone(), fill);
        }
        Ok(Self { fills })
    }

    /// Fill missing cells of the columns this imputer knows about.
    pub fn apply(&self, table: &RawTable) -> Result<RawTable> {
        let lookup: HashMap<usize, f64> = table
            .columns
            .iter()
            .enumerate()
            .filter_map(|(c, name)| self.fills.get(name).map(|&f| (c, f)))
            .collect();
        let rows = table
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(c, cell)| cell.or_else(|| lookup.get(&c).copied()))
                    .collect()
            })
            .collect();
        Ok(RawTable {
            columns: table.columns.clone(),
            rows,
            invalid_counts: table.invalid_counts.clone(),
        })
    }
}

/// Mean/mode imputation of every feature column. The target column is left
/// untouched: rows without a label are dropped at encoding time.
pub fn impute(table: &RawTable, schema: &Schema) -> Result<RawTable> {
    Imputer::fit(table, schema)?.apply(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::FeatureSpec;
    use proptest::prelude::*;

    fn schema_xy() -> Schema {
        Schema::new(
            vec![
                FeatureSpec::numeric("x"),
                FeatureSpec::nominal("c", &[1, 2, 3]),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn header_order_is_free() {
        let csv = "c,x\n1,0.5\n2,\n";
        let t = read_csv(csv.as_bytes(), &schema_xy()).unwrap();
        assert_eq!(t.columns(), &["x".to_string(), "c".to_string()]);
        assert_eq!(t.rows()[0], vec![Some(0.5), Some(1.0)]);
        assert_eq!(t.rows()[1], vec![None, Some(2.0)]);
    }

    #[test]
    fn header_mismatch_lists_names() {
        let err = read_csv("x,z\n1,2\n".as_bytes(), &schema_xy()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing: [c]"), "{msg}");
        assert!(msg.contains("unexpected: [z]"), "{msg}");
    }

    #[test]
    fn invalid_code_becomes_missing_and_counted() {
        let t = read_csv("x,c\n1,99\n2,abc\n3,2\n".as_bytes(), &schema_xy()).unwrap();
        assert_eq!(t.rows()[0][1], None);
        assert_eq!(t.rows()[1][1], None);
        assert_eq!(t.invalid_counts(), &[0, 2]);
    }

    #[test]
    fn quoted_fields_parse() {
        let t = read_csv("\"x\",\"c\"\n\"1.5\",\"3\"\n".as_bytes(), &schema_xy()).unwrap();
        assert_eq!(t.rows()[0], vec![Some(1.5), Some(3.0)]);
    }

    #[test]
    fn imputation_examples() {
        let schema = schema_xy();
        let t = RawTable::new(
            vec!["x".into(), "c".into()],
            vec![
                vec![Some(1.0), Some(1.0)],
                vec![Some(2.0), Some(1.0)],
                vec![None, Some(2.0)],
                vec![Some(3.0), None],
            ],
        )
        .unwrap();
        let out = impute(&t, &schema).unwrap();
        assert_eq!(out.rows()[2][0], Some(2.0));
        assert_eq!(out.rows()[3][1], Some(1.0));
    }

    #[test]
    fn mode_tie_takes_smallest_code() {
        let schema = schema_xy();
        let t = RawTable::new(
            vec!["x".into(), "c".into()],
            vec![
                vec![Some(0.0), Some(2.0)],
                vec![Some(0.0), Some(1.0)],
                vec![Some(0.0), None],
            ],
        )
        .unwrap();
        assert_eq!(impute(&t, &schema).unwrap().rows()[2][1], Some(1.0));
    }

    #[test]
    fn all_missing_column_is_named() {
        let t = RawTable::new(
            vec!["x".into(), "c".into()],
            vec![vec![None, Some(1.0)], vec![None, Some(2.0)]],
        )
        .unwrap();
        let err = impute(&t, &schema_xy()).unwrap_err();
        assert!(err.to_string().contains("'x'"));
    }

    fn arb_table() -> impl Strategy<Value = RawTable> {
        prop::collection::vec(
            (prop::option::weighted(0.7, -5.0f64..5.0), prop::option::weighted(0.7, 1i64..=3)),
            2..40,
        )
        .prop_filter("each column observed once", |rows| {
            rows.iter().any(|r| r.0.is_some()) && rows.iter().any(|r| r.1.is_some())
        })
        .prop_map(|rows| {
            RawTable::new(
                vec!["x".into(), "c".into()],
                rows.into_iter()
                    .map(|(x, c)| vec![x, c.map(|v| v as f64)])
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn impute_fills_everything_and_is_idempotent(t in arb_table()) {
            let schema = schema_xy();
            let once = impute(&t, &schema).unwrap();
            prop_assert_eq!(once.missing_count(), 0);
            prop_assert!(once.rows().iter().flatten().all(|c| c.unwrap().is_finite()));
            let twice = impute(&once, &schema).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
