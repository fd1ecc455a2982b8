//! Schema-driven ingestion, cleaning, encoding, labelling and synthetic data.

mod dataset;
mod encode;
mod labels;
mod schema;
pub mod synth;
mod table;

pub use dataset::{ClassDistribution, Dataset};
pub use encode::{encode, encode_features, Encoded};
pub use labels::{label_bmi, BmiCutoffs, NutritionClass, BMI_CENTI_RANGE};
pub use schema::{ColumnRole, FeatureKind, FeatureSpec, Schema, TargetEncoding, TargetSpec};
pub use synth::{generate_synthetic, FeatureDistribution, GeneratedFeature, GeneratorSpec};
pub use table::{
    impute, load_csv, load_features_csv, read_csv, read_features_csv, Imputer, RawTable,
};
