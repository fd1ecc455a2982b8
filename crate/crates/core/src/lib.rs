//! Tabular ensemble-learning pipeline for four-class maternal nutritional-status
//! prediction.
//!
//! The crate is organised the way the pipeline runs:
//!
//! * [`data`] parses schema-driven CSV, imputes, encodes and labels records, and
//!   ships a synthetic survey-like generator.
//! * [`resampling`] balances classes with SMOTE.
//! * [`selection`] scores features with filter statistics and refines the set by
//!   sequential backward selection.
//! * [`ensembles`] holds from-scratch CART trees, random forests, SAMME AdaBoost,
//!   second-order softmax gradient boosting and oblivious-tree boosting.
//! * [`evaluation`] provides stratified splits, k-fold CV, confusion matrices,
//!   the metric suite and one-vs-rest ROC analysis.
//! * [`tuning`] runs grid search over stratified CV.
//! * [`pipeline`] ties everything together, writes reports and SVG plots, and
//!   applies persisted models to new records.

pub mod data;
pub mod ensembles;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod resampling;
pub mod rng;
pub mod selection;
pub mod tuning;

pub use data::{ClassDistribution, Dataset, FeatureKind, FeatureSpec, NutritionClass, Schema};
pub use ensembles::{ModelParams, TrainedModel};
pub use error::{Error, Result};
