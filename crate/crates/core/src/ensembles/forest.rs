use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::presort::Presorted;
use super::tree::{grow_tree, DecisionTree, MaxFeatures, TreeParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// How tree outputs are combined into class probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteRule {
    /// Mean of one-hot tree votes.
    #[default]
    Hard,
    /// Mean of leaf class distributions.
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub vote: VoteRule,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            tree: TreeParams {
                max_features: MaxFeatures::Sqrt,
                ..TreeParams::default()
            },
            bootstrap: true,
            vote: VoteRule::Hard,
            seed: 0,
        }
    }
}

impl ForestParams {
    /// Tuned configuration: 400 trees, depth 100, min split 3, sqrt features, gini.
    pub fn tuned() -> Self {
        Self {
            n_estimators: 400,
            tree: TreeParams {
                max_depth: Some(100),
                min_samples_split: 3,
                max_features: MaxFeatures::Sqrt,
                ..TreeParams::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParam("n_estimators must be at least 1".into()));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub vote: VoteRule,
    pub n_classes: usize,
    pub n_features: usize,
}

impl RandomForest {
    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            match self.vote {
                VoteRule::Hard => acc[tree.predict_row(x)] += 1.0,
                VoteRule::Soft => {
                    for (a, p) in acc.iter_mut().zip(tree.leaf_distribution(x)) {
                        *a += p;
                    }
                }
            }
        }
        super::normalize(acc)
    }

    pub fn raw_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (t, v) in total.iter_mut().zip(tree.raw_importance()) {
                *t += v;
            }
        }
        let n = self.trees.len() as f64;
        total.into_iter().map(|v| v / n).collect()
    }
}

/// Bagged CART forest. Tree `t` draws its bootstrap sample and feature subsets
/// from the stream `(seed, t)`, so training order and thread count never
/// change the model.
pub fn fit_random_forest(ds: &Dataset, params: &ForestParams) -> Result<RandomForest> {
    params.validate()?;
    let presorted = Presorted::new(ds);
    let n = ds.n_rows();
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(params.seed, &[rng::TAG_FOREST, t as u64]);
            let weights = if params.bootstrap {
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            grow_tree(ds, &weights, &params.tree, &mut rng, &presorted)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        vote: params.vote,
        n_classes: ds.n_classes(),
        n_features: ds.n_features(),
    })
}
