//! From-scratch tree ensembles sharing one train/predict contract.

mod adaboost;
mod forest;
mod gbt;
mod impurity;
mod model;
mod oblivious;
mod presort;
mod tree;

pub use adaboost::{fit_adaboost, samme_alpha, AdaBoost, AdaBoostParams, PERFECT_ALPHA};
pub use forest::{fit_random_forest, ForestParams, RandomForest, VoteRule};
pub use gbt::{
    fit_gbt, leaf_weight, multiclass_log_loss, softmax, softmax_grad_hess, split_gain, GbtParams,
    GradientBoosted, RegressionNode, RegressionTree,
};
pub use impurity::{impurity, Criterion};
pub use model::{
    feature_importance, Ensemble, ModelKind, ModelParams, Preprocessing, TrainedModel, MODEL_FORMAT_VERSION,
};
pub use oblivious::{fit_oblivious_gbt, ObliviousBoosted, ObliviousLevel, ObliviousParams, ObliviousTree};
pub use tree::{best_split, fit_tree, DecisionTree, MaxFeatures, SplitCandidate, TreeNode, TreeParams};

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Scale non-negative weights to sum 1; an all-zero vector becomes uniform.
pub(crate) fn normalize(mut values: Vec<f64>) -> Vec<f64> {
    let sum: f64 = values.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        for v in &mut values {
            *v /= sum;
        }
    } else {
        let u = 1.0 / values.len() as f64;
        values.iter_mut().for_each(|v| *v = u);
    }
    values
}
