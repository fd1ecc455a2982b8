//! Filter statistics (mutual information, chi-square, ANOVA F) and
//! sequential backward selection wrapped around a random forest.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ensembles::{ForestParams, ModelParams};
use crate::error::{Error, Result};
use crate::evaluation::{require_class_size, stratified_kfold};
use crate::tuning::{cross_val_scores, ScoreMetric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub statistic: String,
    /// Non-negative; ANOVA reports `+inf` when groups are separated with no
    /// within-group spread. JSON stores that sentinel as the string "inf".
    #[serde(with = "inf_as_string")]
    pub value: f64,
}

mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad score '{t}'"))),
        }
    }
}

pub const DEFAULT_BINS: usize = 10;

/// Discrete codes `0..m` for one column. Categorical columns keep one code per
/// distinct level; numeric columns are cut at up to `bins - 1` quantiles.
fn discretize(ds: &Dataset, j: usize, bins: usize) -> (Vec<usize>, usize) {
    let col = ds.column(j);
    let values: Vec<f64> = if ds.features()[j].is_categorical() {
        col
    } else {
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut edges: Vec<f64> = (1..bins).map(|i| sorted[i * n / bins]).collect();
        edges.dedup();
        col.iter()
            .map(|&v| edges.partition_point(|&e| e <= v) as f64)
            .collect()
    };
    let mut index = BTreeMap::new();
    let mut sorted: Vec<f64> = values.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for (i, v) in sorted.iter().enumerate() {
        index.insert(v.to_bits(), i);
    }
    let codes = values.iter().map(|v| index[&v.to_bits()]).collect();
    (codes, sorted.len())
}

fn contingency(codes: &[usize], m: usize, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; k]; m];
    for (&c, &y) in codes.iter().zip(labels) {
        table[c][y] += 1.0;
    }
    table
}

fn check_rows(ds: &Dataset) -> Result<()> {
    if ds.n_rows() < 2 {
        return Err(Error::Data("filter statistics need at least 2 rows".into()));
    }
    Ok(())
}

/// Mutual information in bits of a contingency table of counts.
pub fn mutual_information_table(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let k = table.first().map_or(0, Vec::len);
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            if o > 0.0 {
                mi += o / n * (o * n / (rows[r] * cols[c])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Pearson chi-square statistic of a contingency table; cells with zero
/// expectation contribute nothing.
pub fn chi_square_table(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let k = table.first().map_or(0, Vec::len);
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = rows[r] * cols[c] / n;
            if e > 0.0 {
                stat += (o - e) * (o - e) / e;
            }
        }
    }
    stat
}

fn table_scores(
    ds: &Dataset,
    bins: usize,
    name: &str,
    f: fn(&[Vec<f64>]) -> f64,
) -> Result<Vec<FeatureScore>> {
    check_rows(ds)?;
    if bins < 2 {
        return Err(Error::InvalidParam("bins must be at least 2".into()));
    }
    Ok((0..ds.n_features())
        .into_par_iter()
        .map(|j| {
            let (codes, m) = discretize(ds, j, bins);
            let table = contingency(&codes, m, ds.labels(), ds.n_classes());
            FeatureScore {
                feature: j,
                statistic: name.to_string(),
                value: f(&table),
            }
        })
        .collect())
}

/// I(X; Y) in bits per feature.
pub fn mutual_information(ds: &Dataset, bins: usize) -> Result<Vec<FeatureScore>> {
    table_scores(ds, bins, "mutual_information", mutual_information_table)
}

/// Pearson chi-square of the (binned feature x class) table per feature.
pub fn chi_square(ds: &Dataset, bins: usize) -> Result<Vec<FeatureScore>> {
    table_scores(ds, bins, "chi_square", chi_square_table)
}

/// One-way ANOVA F statistic of `values` grouped by `groups`, over the
/// non-empty groups.
pub fn anova_f_values(values: &[f64], groups: &[usize], n_groups: usize) -> Result<f64> {
    let mut sums = vec![0.0; n_groups];
    let mut counts = vec![0usize; n_groups];
    for (&v, &g) in values.iter().zip(groups) {
        sums[g] += v;
        counts[g] += 1;
    }
    let k = counts.iter().filter(|&&c| c > 0).count();
    let n = values.len();
    if n <= k {
        return Err(Error::Data(format!("ANOVA needs more rows ({n}) than groups ({k})")));
    }
    if k < 2 {
        return Ok(0.0);
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let ssb: f64 = means
        .iter()
        .zip(&counts)
        .map(|(&m, &c)| c as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = values
        .iter()
        .zip(groups)
        .map(|(&v, &g)| (v - means[g]) * (v - means[g]))
        .sum();
    if ssb == 0.0 {
        return Ok(0.0);
    }
    if ssw == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((ssb / (k - 1) as f64) / (ssw / (n - k) as f64))
}

/// ANOVA F of each feature across the classes.
pub fn anova_f(ds: &Dataset) -> Result<Vec<FeatureScore>> {
    (0..ds.n_features())
        .map(|j| {
            Ok(FeatureScore {
                feature: j,
                statistic: "anova_f".into(),
                value: anova_f_values(&ds.column(j), ds.labels(), ds.n_classes())?,
            })
        })
        .collect()
}

/// Indices of the `m` highest scores, highest first; ties go to the lower
/// feature index.
pub fn rank_features(scores: &[FeatureScore], m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > scores.len() {
        return Err(Error::InvalidParam(format!(
            "cannot select {m} of {} features",
            scores.len()
        )));
    }
    let mut order: Vec<&FeatureScore> = scores.iter().collect();
    order.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.feature.cmp(&b.feature)));
    Ok(order.into_iter().take(m).map(|s| s.feature).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsStep {
    pub removed: usize,
    /// Mean CV accuracy of the remaining set after the removal.
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    /// Surviving feature indices, ascending.
    pub selected: Vec<usize>,
    /// Removals in order.
    pub trace: Vec<SbsStep>,
    /// Mean CV accuracy with every feature.
    pub initial_accuracy: f64,
}

/// Small forest used as the default wrapper estimator.
pub fn default_sbs_estimator() -> ForestParams {
    ForestParams {
        n_estimators: 50,
        ..ForestParams::default()
    }
}

/// Greedy backward elimination. Each step drops the feature whose removal
/// gives the best mean stratified-CV accuracy; ties drop the higher index.
/// Folds and the forest seed are fixed for the whole run.
pub fn sequential_backward(
    ds: &Dataset,
    estimator: &ForestParams,
    target_size: usize,
    cv_folds: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let d = ds.n_features();
    if target_size == 0 || target_size >= d {
        return Err(Error::InvalidParam(format!(
            "target size {target_size} must lie in 1..{d}"
        )));
    }
    require_class_size(ds.labels(), ds.n_classes(), cv_folds)?;
    let folds = stratified_kfold(ds.labels(), ds.n_classes(), cv_folds, seed)?;
    let params = ModelParams::RandomForest(ForestParams {
        seed,
        ..estimator.clone()
    });
    let score = |cols: &[usize]| -> Result<f64> {
        let sub = ds.select_features(cols)?;
        let s = cross_val_scores(&sub, &params, &folds, ScoreMetric::Accuracy)?;
        Ok(s.iter().sum::<f64>() / s.len() as f64)
    };

    let mut current: Vec<usize> = (0..d).collect();
    let initial_accuracy = score(&current)?;
    let mut trace = Vec::with_capacity(d - target_size);
    while current.len() > target_size {
        let results: Vec<(usize, f64)> = current
            .par_iter()
            .map(|&cand| {
                let rest: Vec<usize> = current.iter().copied().filter(|&c| c != cand).collect();
                score(&rest).map(|s| (cand, s))
            })
            .collect::<Result<_>>()?;
        let (removed, cv_accuracy) = results
            .into_iter()
            .reduce(|best, cur| {
                if cur.1 > best.1 || (cur.1 == best.1 && cur.0 > best.0) {
                    cur
                } else {
                    best
                }
            })
            .expect("non-empty candidate set");
        log::debug!("sbs removed feature {removed} (cv accuracy {cv_accuracy:.4})");
        current.retain(|&c| c != removed);
        trace.push(SbsStep {
            removed,
            cv_accuracy,
        });
    }
    Ok(SelectionResult {
        method: "sequential_backward".into(),
        selected: current,
        trace,
        initial_accuracy,
    })
}
