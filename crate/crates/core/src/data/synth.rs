//! Synthetic survey-like data with controllable class signal.
//!
//! Labels are drawn from class marginals; each feature is then drawn from its
//! class-conditional distribution (categorical probability tables or clamped
//! normals). Every row has its own random stream, so output is identical for a
//! given `(spec, n, seed)` regardless of thread count.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::labels::BmiCutoffs;
use super::schema::{edhs_feature_specs, ColumnRole, FeatureKind, FeatureSpec, Schema, TargetEncoding, TargetSpec};
use crate::error::{Error, Result};
use crate::rng;

const PROB_TOLERANCE: f64 = 1e-9;

/// Class marginals reported for the source survey: severe, moderate, normal,
/// overnutrition.
pub const SURVEY_MARGINALS: [f64; 4] = [0.088, 0.229, 0.667, 0.016];

/// Signal strength of the bundled benchmark generator.
pub const BENCHMARK_SIGNAL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// One probability row per class, aligned with the column's `valid_codes`.
    Categorical { class_probs: Vec<Vec<f64>> },
    /// Per-class normal, clamped to `[min, max]` and rounded to `decimals`.
    Normal {
        means: Vec<f64>,
        stds: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decimals: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFeature {
    #[serde(flatten)]
    pub spec: FeatureSpec,
    pub distribution: FeatureDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default = "one")]
    pub version: u32,
    pub class_marginals: Vec<f64>,
    pub features: Vec<GeneratedFeature>,
    /// Probability of blanking a feature cell in CSV output. The in-memory
    /// dataset is always complete.
    #[serde(default)]
    pub missing_rate: f64,
    /// Bands used to synthesise the BMI column of CSV output.
    #[serde(default)]
    pub bmi_cutoffs: BmiCutoffs,
}

fn one() -> u32 {
    1
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidParam(format!(
            "{what}: probabilities must be non-negative and sum to 1 (got {sum})"
        )));
    }
    Ok(())
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave u just above the running total; fall back to the
    // last category with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

struct Record {
    label: usize,
    raw: Vec<f64>,
    bmi_centi: i64,
    missing: Vec<bool>,
}

impl GeneratorSpec {
    pub fn n_classes(&self) -> usize {
        self.class_marginals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_classes();
        if k < 2 {
            return Err(Error::InvalidParam("need at least two class marginals".into()));
        }
        check_probs(&self.class_marginals, "class_marginals")?;
        if self.features.is_empty() {
            return Err(Error::InvalidParam("generator defines no features".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidParam("missing_rate must lie in [0, 1)".into()));
        }
        self.bmi_cutoffs.validate()?;
        for f in &self.features {
            f.spec.validate()?;
            match &f.distribution {
                FeatureDistribution::Categorical { class_probs } => {
                    if !f.spec.is_categorical() {
                        return Err(Error::InvalidParam(format!(
                            "'{}': categorical distribution on numeric column",
                            f.spec.name
                        )));
                    }
                    if class_probs.len() != k {
                        return Err(Error::InvalidParam(format!(
                            "'{}': expected {k} class rows",
                            f.spec.name
                        )));
                    }
                    for (c, row) in class_probs.iter().enumerate() {
                        if row.len() != f.spec.codes().len() {
                            return Err(Error::InvalidParam(format!(
                                "'{}': class {c} row does not match valid_codes",
                                f.spec.name
                            )));
                        }
                        check_probs(row, &format!("'{}' class {c}", f.spec.name))?;
                    }
                }
                FeatureDistribution::Normal {
                    means,
                    stds,
                    min,
                    max,
                    ..
                } => {
                    if f.spec.is_categorical() {
                        return Err(Error::InvalidParam(format!(
                            "'{}': normal distribution on categorical column",
                            f.spec.name
                        )));
                    }
                    if means.len() != k || stds.len() != k {
                        return Err(Error::InvalidParam(format!(
                            "'{}': expected {k} means and stds",
                            f.spec.name
                        )));
                    }
                    if means.iter().any(|m| !m.is_finite())
                        || stds.iter().any(|s| !s.is_finite() || *s < 0.0)
                    {
                        return Err(Error::InvalidParam(format!(
                            "'{}': means must be finite and stds non-negative",
                            f.spec.name
                        )));
                    }
                    if let (Some(lo), Some(hi)) = (min, max) {
                        if lo > hi {
                            return Err(Error::InvalidParam(format!(
                                "'{}': min exceeds max",
                                f.spec.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Schema describing the CSV this generator writes.
    pub fn schema(&self) -> Schema {
        let mut columns: Vec<FeatureSpec> = self.features.iter().map(|f| f.spec.clone()).collect();
        columns.push(
            FeatureSpec::numeric("bmi")
                .with_role(ColumnRole::Target)
                .with_group("health"),
        );
        Schema {
            version: 1,
            columns,
            target: Some(TargetSpec {
                column: "bmi".into(),
                encoding: TargetEncoding::BmiCenti,
            }),
        }
    }

    fn bmi_band(&self, class: usize) -> (i64, i64) {
        let c = &self.bmi_cutoffs;
        let severe = (c.severe * 100.0).ceil() as i64;
        let normal = (c.normal_low * 100.0).ceil() as i64;
        let over = (c.over * 100.0).ceil() as i64;
        match class {
            0 => (1200.min(severe - 1), severe - 1),
            1 => (severe, normal - 1),
            2 => (normal, over - 1),
            _ => (over, 4000.max(over)),
        }
    }

    fn record(&self, seed: u64, row: usize) -> Record {
        let mut rng = rng::stream(seed, &[rng::TAG_SYNTH, row as u64]);
        let label = sample_index(&self.class_marginals, &mut rng);
        let raw = self
            .features
            .iter()
            .map(|f| match &f.distribution {
                FeatureDistribution::Categorical { class_probs } => {
                    f.spec.codes()[sample_index(&class_probs[label], &mut rng)] as f64
                }
                FeatureDistribution::Normal {
                    means,
                    stds,
                    min,
                    max,
                    decimals,
                } => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let mut v = means[label] + stds[label] * z;
                    if let Some(d) = decimals {
                        let scale = 10f64.powi(*d as i32);
                        v = (v * scale).round() / scale;
                    }
                    if let Some(lo) = min {
                        v = v.max(*lo);
                    }
                    if let Some(hi) = max {
                        v = v.min(*hi);
                    }
                    v
                }
            })
            .collect();
        let (lo, hi) = self.bmi_band(label);
        let bmi_centi = rng.random_range(lo..=hi);
        let missing = (0..self.features.len())
            .map(|_| self.missing_rate > 0.0 && rng.random::<f64>() < self.missing_rate)
            .collect();
        Record {
            label,
            raw,
            bmi_centi,
            missing,
        }
    }

    fn records(&self, n: usize, seed: u64) -> Result<Vec<Record>> {
        self.validate()?;
        if n < self.n_classes() {
            return Err(Error::InvalidParam(format!(
                "need at least {} rows, got {n}",
                self.n_classes()
            )));
        }
        Ok((0..n)
            .into_par_iter()
            .map(|i| self.record(seed, i))
            .collect())
    }

    /// Write `n` rows as CSV in the layout of [`GeneratorSpec::schema`].
    pub fn write_csv<W: Write>(&self, n: usize, seed: u64, writer: W) -> Result<()> {
        let records = self.records(n, seed)?;
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.features.iter().map(|f| f.spec.name.as_str()).collect();
        header.push("bmi");
        wtr.write_record(&header)?;
        for rec in &records {
            let mut fields: Vec<String> = rec
                .raw
                .iter()
                .zip(&rec.missing)
                .map(|(v, &m)| if m { String::new() } else { format!("{v}") })
                .collect();
            fields.push(rec.bmi_centi.to_string());
            wtr.write_record(&fields)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: GeneratorSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Strong-signal, balanced-class generator used by the bundled benchmark.
    pub fn benchmark() -> Self {
        Self::edhs_like(BENCHMARK_SIGNAL, &[0.25; 4])
    }

    /// Survey-like generator over the bundled 30-feature schema.
    ///
    /// `signal` scales every class-conditional effect; 0 makes all features
    /// independent of the label. Region, age group, wealth index and education
    /// carry the strongest effects.
    pub fn edhs_like(signal: f64, class_marginals: &[f64]) -> Self {
        let k = class_marginals.len();
        let mut pattern = rng::stream(0xED45, &[]);
        let mut normals = |count: usize| -> Vec<f64> {
            (0..count).map(|_| StandardNormal.sample(&mut pattern)).collect()
        };
        let features = edhs_feature_specs()
            .into_iter()
            .map(|spec| {
                let strength = signal * feature_strength(&spec.name);
                let distribution = if spec.is_categorical() {
                    let m = spec.codes().len();
                    let base = normals(m);
                    let class_probs = (0..k)
                        .map(|_| {
                            let affinity = normals(m);
                            let logits: Vec<f64> = base
                                .iter()
                                .zip(&affinity)
                                .map(|(b, a)| 0.5 * b + strength * a)
                                .collect();
                            softmax(&logits)
                        })
                        .collect();
                    FeatureDistribution::Categorical { class_probs }
                } else {
                    let (mean, std, min, max, decimals) = numeric_profile(&spec.name);
                    let shifts = normals(k);
                    FeatureDistribution::Normal {
                        means: shifts.iter().map(|z| mean + strength * std * z).collect(),
                        stds: vec![std; k],
                        min: Some(min),
                        max: Some(max),
                        decimals: Some(decimals),
                    }
                };
                GeneratedFeature { spec, distribution }
            })
            .collect();
        Self {
            version: 1,
            class_marginals: class_marginals.to_vec(),
            features,
            missing_rate: 0.0,
            bmi_cutoffs: BmiCutoffs::default(),
        }
    }
}

fn feature_strength(name: &str) -> f64 {
    match name {
        "region" | "age_group" | "wealth_index" | "education" => 1.0,
        "residence" | "husband_education" | "literacy" | "has_television" | "anemia_level"
        | "hemoglobin" | "cooking_fuel" | "water_source" | "toilet_type" | "occupation"
        | "children_ever_born" | "household_size" | "age_at_first_birth" | "religion" => 0.5,
        "survey_year" => 0.1,
        _ => 0.25,
    }
}

fn numeric_profile(name: &str) -> (f64, f64, f64, f64, u32) {
    match name {
        "children_ever_born" => (3.5, 2.0, 0.0, 15.0, 0),
        "household_size" => (5.5, 2.2, 1.0, 20.0, 0),
        "age_at_first_birth" => (19.0, 3.0, 12.0, 40.0, 0),
        "hemoglobin" => (12.2, 1.4, 6.0, 17.0, 1),
        _ => (0.0, 1.0, -10.0, 10.0, 3),
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let mut probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    // Push the rounding residue into the largest entry so rows sum to 1.
    let residue = 1.0 - probs.iter().sum::<f64>();
    let top = (0..probs.len())
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .unwrap();
    probs[top] += residue;
    probs
}

/// Draw `n` encoded rows. Deterministic in `(spec, n, seed)`.
pub fn generate_synthetic(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<Dataset> {
    let records = spec.records(n, seed)?;
    let features: Vec<FeatureSpec> = spec.features.iter().map(|f| f.spec.clone()).collect();
    let mut x = Vec::with_capacity(n * features.len());
    let mut y = Vec::with_capacity(n);
    for rec in records {
        for (value, f) in rec.raw.iter().zip(&features) {
            let encoded = match f.kind {
                FeatureKind::Ordinal => f
                    .rank_order()
                    .iter()
                    .position(|&c| c as f64 == *value)
                    .expect("generated code is valid") as f64,
                _ => *value,
            };
            x.push(encoded);
        }
        y.push(rec.label);
    }
    Dataset::new(x, y, features, spec.n_classes())
}
