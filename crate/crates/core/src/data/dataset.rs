use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::FeatureSpec;
use crate::error::{Error, Result};

/// Encoded, fully numeric training data.
///
/// Rows are stored row-major; the struct is immutable once built and every
/// transformation returns a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<usize>,
    n_features: usize,
    features: Vec<FeatureSpec>,
    n_classes: usize,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    version: u32,
    n_classes: usize,
    features: Vec<FeatureSpec>,
    labels: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;

    fn try_from(r: DatasetRepr) -> Result<Self> {
        let d = r.features.len();
        let mut x = Vec::with_capacity(r.rows.len() * d);
        for (i, row) in r.rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Data(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        Dataset::new(x, r.labels, r.features, r.n_classes)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(ds: Dataset) -> Self {
        let rows = (0..ds.n_rows()).map(|i| ds.row(i).to_vec()).collect();
        DatasetRepr {
            version: 1,
            n_classes: ds.n_classes,
            features: ds.features,
            labels: ds.y,
            rows,
        }
    }
}

impl Dataset {
    pub fn new(
        x: Vec<f64>,
        y: Vec<usize>,
        features: Vec<FeatureSpec>,
        n_classes: usize,
    ) -> Result<Self> {
        let d = features.len();
        if d == 0 {
            return Err(Error::Data("dataset needs at least one feature".into()));
        }
        if y.is_empty() {
            return Err(Error::Data("dataset needs at least one row".into()));
        }
        if x.len() != y.len() * d {
            return Err(Error::Data(format!(
                "matrix has {} values, expected {} rows x {d} features",
                x.len(),
                y.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::Data("need at least two classes".into()));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, feature '{}'",
                pos / d,
                features[pos % d].name
            )));
        }
        if let Some((i, &label)) = y.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::Data(format!(
                "label {label} at row {i} outside 0..{n_classes}"
            )));
        }
        Ok(Self {
            x,
            y,
            n_features: d,
            features,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n_features + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &label in &self.y {
            counts[label] += 1;
        }
        counts
    }

    /// Row indices grouped by class, each group ascending.
    pub fn class_rows(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes];
        for (i, &label) in self.y.iter().enumerate() {
            groups[label].push(i);
        }
        groups
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        ClassDistribution::from_counts(self.class_counts())
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.n_features);
        let mut y = Vec::with_capacity(rows.len());
        for &r in rows {
            x.extend_from_slice(self.row(r));
            y.push(self.y[r]);
        }
        Dataset {
            x,
            y,
            n_features: self.n_features,
            features: self.features.clone(),
            n_classes: self.n_classes,
        }
    }

    /// New dataset restricted to the given feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::InvalidParam("empty feature selection".into()));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_features) {
            return Err(Error::InvalidParam(format!(
                "feature index {bad} out of range 0..{}",
                self.n_features
            )));
        }
        let mut x = Vec::with_capacity(self.n_rows() * columns.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            x.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            n_features: columns.len(),
            features: columns.iter().map(|&c| self.features[c].clone()).collect(),
            n_classes: self.n_classes,
        })
    }

    /// Append rows; used by resampling. Values must already be valid.
    pub fn with_appended(&self, x: &[f64], y: &[usize]) -> Result<Dataset> {
        let mut all_x = self.x.clone();
        all_x.extend_from_slice(x);
        let mut all_y = self.y.clone();
        all_y.extend_from_slice(y);
        Dataset::new(all_x, all_y, self.features.clone(), self.n_classes)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let total: usize = counts.iter().sum();
        let proportions = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Self {
            counts,
            proportions,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}
