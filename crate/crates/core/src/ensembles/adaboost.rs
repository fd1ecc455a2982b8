//! Multiclass discrete AdaBoost (SAMME) over weighted CART trees.

use serde::{Deserialize, Serialize};

use super::presort::Presorted;
use super::impurity::Criterion;
use super::tree::{grow_tree, DecisionTree, MaxFeatures, TreeParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Stage weight given to a learner with zero weighted training error.
pub const PERFECT_ALPHA: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub base: TreeParams,
    pub seed: u64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 50,
            base: TreeParams::stump(),
            seed: 0,
        }
    }
}

impl AdaBoostParams {
    /// Tuned configuration: 100 rounds of entropy trees with depth 40, at most
    /// 200 leaves, min split 3 and sqrt features.
    pub fn tuned() -> Self {
        Self {
            n_estimators: 100,
            base: TreeParams {
                criterion: Criterion::Entropy,
                max_depth: Some(40),
                max_leaf_nodes: Some(200),
                min_samples_split: 3,
                max_features: MaxFeatures::Sqrt,
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParam("n_estimators must be at least 1".into()));
        }
        self.base.validate()
    }
}

/// SAMME stage weight `ln((1 - err) / err) + ln(K - 1)`.
pub fn samme_alpha(err: f64, n_classes: usize) -> f64 {
    ((1.0 - err) / err).ln() + ((n_classes - 1) as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stages: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each kept stage.
    pub errors: Vec<f64>,
    pub n_classes: usize,
    pub n_features: usize,
}

impl AdaBoost {
    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for (tree, alpha) in self.stages.iter().zip(&self.alphas) {
            votes[tree.predict_row(x)] += alpha;
        }
        super::normalize(votes)
    }

    pub fn raw_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.stages {
            for (t, v) in total.iter_mut().zip(tree.raw_importance()) {
                *t += v;
            }
        }
        let n = self.stages.len() as f64;
        total.into_iter().map(|v| v / n).collect()
    }
}

pub(crate) struct Trace {
    pub weight_sums: Vec<f64>,
}

pub(crate) fn fit_traced(ds: &Dataset, params: &AdaBoostParams) -> Result<(AdaBoost, Trace)> {
    params.validate()?;
    let n = ds.n_rows();
    let k = ds.n_classes();
    let chance = 1.0 - 1.0 / k as f64;
    let presorted = Presorted::new(ds);
    let mut weights = vec![1.0 / n as f64; n];
    let mut model = AdaBoost {
        stages: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
        n_classes: k,
        n_features: ds.n_features(),
    };
    let mut trace = Trace {
        weight_sums: Vec::new(),
    };

    for round in 0..params.n_estimators {
        let mut rng = rng::stream(params.seed, &[rng::TAG_ADABOOST, round as u64]);
        let tree = grow_tree(ds, &weights, &params.base, &mut rng, &presorted)?;
        let missed: Vec<bool> = (0..n)
            .map(|i| tree.predict_row(ds.row(i)) != ds.labels()[i])
            .collect();
        let err: f64 = weights
            .iter()
            .zip(&missed)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum();

        if err >= chance {
            if model.stages.is_empty() {
                return Err(Error::Data(format!(
                    "first boosting round has weighted error {err:.4}, no better than chance ({chance:.4}) for {k} classes"
                )));
            }
            log::debug!("adaboost stopped at round {round}: error {err:.4} at chance level");
            break;
        }
        if err <= 0.0 {
            model.stages.push(tree);
            model.alphas.push(PERFECT_ALPHA);
            model.errors.push(0.0);
            break;
        }

        let alpha = samme_alpha(err, k);
        let boost = alpha.exp();
        for (w, &m) in weights.iter_mut().zip(&missed) {
            if m {
                *w *= boost;
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        trace.weight_sums.push(weights.iter().sum());

        model.stages.push(tree);
        model.alphas.push(alpha);
        model.errors.push(err);
    }
    Ok((model, trace))
}

/// Fit SAMME AdaBoost. Rounds stop early when a learner reaches chance-level
/// error (discarded) or zero error (kept with [`PERFECT_ALPHA`]).
pub fn fit_adaboost(ds: &Dataset, params: &AdaBoostParams) -> Result<AdaBoost> {
    fit_traced(ds, params).map(|(model, _)| model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, FeatureSpec, GeneratorSpec};
    use crate::ensembles::argmax;

    #[test]
    fn alpha_examples() {
        assert!(samme_alpha(0.75, 4).abs() < 1e-15);
        assert!((samme_alpha(0.1, 4) - 27f64.ln()).abs() < 1e-12);
        assert!((samme_alpha(0.1, 4) - 3.2958).abs() < 1e-4);
    }

    #[test]
    fn perfect_first_learner_stops_with_capped_alpha() {
        let features = vec![FeatureSpec::numeric("x")];
        let ds = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![0, 1, 2, 3], features, 4).unwrap();
        let params = AdaBoostParams {
            base: TreeParams::default(),
            ..AdaBoostParams::default()
        };
        let model = fit_adaboost(&ds, &params).unwrap();
        assert_eq!(model.stages.len(), 1);
        assert_eq!(model.alphas, vec![PERFECT_ALPHA]);
        for i in 0..4 {
            assert_eq!(
                argmax(&model.predict_proba_row(ds.row(i))),
                model.stages[0].predict_row(ds.row(i))
            );
        }
    }

    #[test]
    fn chance_level_first_round_is_an_error() {
        // A constant feature cannot split, so the root leaf predicts one of
        // four balanced classes: error 0.75.
        let features = vec![FeatureSpec::numeric("x")];
        let y: Vec<usize> = (0..8).map(|i| i % 4).collect();
        let ds = Dataset::new(vec![1.0; 8], y, features, 4).unwrap();
        let err = fit_adaboost(&ds, &AdaBoostParams::default()).unwrap_err();
        assert!(err.to_string().contains("no better than chance"));
    }

    #[test]
    fn weights_stay_normalised_and_alphas_positive() {
        let spec = GeneratorSpec::edhs_like(0.6, &[0.25; 4]);
        let ds = generate_synthetic(&spec, 400, 2).unwrap();
        let params = AdaBoostParams {
            n_estimators: 30,
            base: TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
            seed: 1,
        };
        let (model, trace) = fit_traced(&ds, &params).unwrap();
        assert!(!model.stages.is_empty());
        for s in trace.weight_sums {
            assert!((s - 1.0).abs() < 1e-9);
        }
        for (&a, &e) in model.alphas.iter().zip(&model.errors) {
            assert!(a > 0.0 || e == 0.0);
        }
        for i in 0..ds.n_rows() {
            let p = model.predict_proba_row(ds.row(i));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
