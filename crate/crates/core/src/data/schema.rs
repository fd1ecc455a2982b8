use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Ordinal,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    #[default]
    Feature,
    Target,
    Ignore,
}

/// One column of the survey schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub role: ColumnRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_codes: Option<Vec<i64>>,
    /// Code ordering for ordinal columns; the encoded value is the 0-based rank.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal_order: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            role: ColumnRole::Feature,
            valid_codes: None,
            ordinal_order: None,
            group: None,
        }
    }

    pub fn nominal(name: &str, codes: &[i64]) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Nominal,
            role: ColumnRole::Feature,
            valid_codes: Some(codes.to_vec()),
            ordinal_order: None,
            group: None,
        }
    }

    pub fn ordinal(name: &str, order: &[i64]) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Ordinal,
            role: ColumnRole::Feature,
            valid_codes: Some(order.to_vec()),
            ordinal_order: Some(order.to_vec()),
            group: None,
        }
    }

    pub fn with_group(mut self, group: &str) -> Self {
        self.group = Some(group.to_string());
        self
    }

    pub fn with_role(mut self, role: ColumnRole) -> Self {
        self.role = role;
        self
    }

    pub fn is_categorical(&self) -> bool {
        self.kind != FeatureKind::Numeric
    }

    pub fn codes(&self) -> &[i64] {
        self.valid_codes.as_deref().unwrap_or(&[])
    }

    /// Ordering used for rank encoding: `ordinal_order` when given, otherwise
    /// the listed valid codes.
    pub fn rank_order(&self) -> &[i64] {
        self.ordinal_order
            .as_deref()
            .unwrap_or_else(|| self.codes())
    }

    /// Values a categorical column can take after encoding, ascending.
    pub fn encoded_levels(&self) -> Option<Vec<f64>> {
        match self.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Ordinal => Some((0..self.rank_order().len()).map(|r| r as f64).collect()),
            FeatureKind::Nominal => {
                let mut levels: Vec<f64> = self.codes().iter().map(|&c| c as f64).collect();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                Some(levels)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Schema("column with empty name".into()));
        }
        if self.is_categorical() {
            let codes = self.codes();
            if codes.is_empty() {
                return Err(Error::Schema(format!(
                    "categorical column '{}' has no valid_codes",
                    self.name
                )));
            }
            let unique: HashSet<i64> = codes.iter().copied().collect();
            if unique.len() != codes.len() {
                return Err(Error::Schema(format!(
                    "column '{}' lists duplicate codes",
                    self.name
                )));
            }
            if let Some(order) = &self.ordinal_order {
                let order_set: HashSet<i64> = order.iter().copied().collect();
                if order.len() != codes.len() || order_set != unique {
                    return Err(Error::Schema(format!(
                        "ordinal_order of '{}' is not a permutation of valid_codes",
                        self.name
                    )));
                }
            }
        } else if self.ordinal_order.is_some() {
            return Err(Error::Schema(format!(
                "numeric column '{}' cannot carry an ordinal_order",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetEncoding {
    /// BMI stored as an integer scaled by 100, labelled through cutoffs.
    BmiCenti,
    /// Column already holds the class code.
    ClassCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub column: String,
    pub encoding: TargetEncoding,
}

/// Ordered list of CSV columns plus the label source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub columns: Vec<FeatureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
}

fn schema_version() -> u32 {
    1
}

impl Schema {
    pub fn new(columns: Vec<FeatureSpec>, target: Option<TargetSpec>) -> Result<Self> {
        let schema = Self {
            version: 1,
            columns,
            target,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: Schema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        let mut seen = HashSet::new();
        for col in &self.columns {
            col.validate()?;
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
        }
        if self.feature_indices().is_empty() {
            return Err(Error::Schema("schema has no feature columns".into()));
        }
        if let Some(target) = &self.target {
            let idx = self.column_index(&target.column).ok_or_else(|| {
                Error::Schema(format!("target column '{}' not in schema", target.column))
            })?;
            if self.columns[idx].role != ColumnRole::Target {
                return Err(Error::Schema(format!(
                    "target column '{}' must have role 'target'",
                    target.column
                )));
            }
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Feature)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn features(&self) -> Vec<FeatureSpec> {
        self.feature_indices()
            .into_iter()
            .map(|i| self.columns[i].clone())
            .collect()
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target.as_ref().and_then(|t| self.column_index(&t.column))
    }

    /// The bundled 30-attribute survey schema, with BMI (×100) as the label
    /// source column.
    pub fn edhs() -> Self {
        let mut columns = edhs_feature_specs();
        columns.push(
            FeatureSpec::numeric("bmi")
                .with_role(ColumnRole::Target)
                .with_group("health"),
        );
        Self::new(
            columns,
            Some(TargetSpec {
                column: "bmi".into(),
                encoding: TargetEncoding::BmiCenti,
            }),
        )
        .expect("bundled schema is valid")
    }
}

fn range(lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi).collect()
}

/// Feature columns of the bundled schema, grouped demographic, educational,
/// socioeconomic, health and household.
pub(crate) fn edhs_feature_specs() -> Vec<FeatureSpec> {
    use FeatureSpec as F;
    vec![
        F::nominal("survey_year", &[2005, 2011, 2016, 2019]).with_group("demographic"),
        F::ordinal("age_group", &range(1, 7)).with_group("demographic"),
        F::nominal("region", &range(1, 11)).with_group("demographic"),
        F::nominal("residence", &[1, 2]).with_group("demographic"),
        F::nominal("religion", &range(1, 6)).with_group("demographic"),
        F::nominal("marital_status", &range(0, 5)).with_group("demographic"),
        F::numeric("children_ever_born").with_group("demographic"),
        F::numeric("household_size").with_group("demographic"),
        F::nominal("household_head_sex", &[1, 2]).with_group("demographic"),
        F::numeric("age_at_first_birth").with_group("demographic"),
        F::ordinal("education", &range(0, 3)).with_group("educational"),
        F::ordinal("husband_education", &range(0, 3)).with_group("educational"),
        F::ordinal("literacy", &[0, 1, 2]).with_group("educational"),
        F::ordinal("wealth_index", &range(1, 5)).with_group("socioeconomic"),
        F::nominal("occupation", &range(0, 9)).with_group("socioeconomic"),
        F::nominal("husband_occupation", &range(0, 9)).with_group("socioeconomic"),
        F::nominal("has_electricity", &[0, 1]).with_group("socioeconomic"),
        F::nominal("has_radio", &[0, 1]).with_group("socioeconomic"),
        F::nominal("has_television", &[0, 1]).with_group("socioeconomic"),
        F::nominal("has_refrigerator", &[0, 1]).with_group("socioeconomic"),
        F::nominal("owns_land", &[0, 1]).with_group("socioeconomic"),
        F::nominal("currently_pregnant", &[0, 1]).with_group("health"),
        F::nominal("contraceptive_use", &range(0, 3)).with_group("health"),
        F::nominal("breastfeeding", &[0, 1]).with_group("health"),
        // EDHS anemia coding: 1 severe .. 4 not anemic.
        F::ordinal("anemia_level", &[1, 2, 3, 4]).with_group("health"),
        F::nominal("smokes", &[0, 1]).with_group("health"),
        F::numeric("hemoglobin").with_group("health"),
        F::nominal("water_source", &range(1, 6)).with_group("household"),
        F::nominal("toilet_type", &range(1, 5)).with_group("household"),
        F::nominal("cooking_fuel", &range(1, 6)).with_group("household"),
    ]
}
