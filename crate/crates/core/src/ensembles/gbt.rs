//! Second-order gradient boosting with one regression tree per class per round.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::presort::{midpoint, partition, Presorted};
use crate::data::Dataset;
use crate::error::{Error, Result};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum loss reduction to make a split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    /// Unused by the deterministic fit; kept so every model accepts a seed.
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    /// Tuned configuration: 500 rounds, depth 100, learning rate 0.1.
    pub fn tuned() -> Self {
        Self {
            n_estimators: 500,
            max_depth: 100,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParam("n_estimators must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam("learning_rate must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return Err(Error::InvalidParam(
                "lambda, gamma and min_child_weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-class gradient `p_k - 1[y = k]` and diagonal hessian `p_k (1 - p_k)`.
pub fn softmax_grad_hess(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(scores);
    let g = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| pk - if k == label { 1.0 } else { 0.0 })
        .collect();
    let h = p.iter().map(|&pk| pk * (1.0 - pk)).collect();
    (g, h)
}

/// Cross-entropy of the softmax of `scores` against `label`.
pub fn multiclass_log_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Newton step `-G / (H + lambda)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Structure-score gain of splitting a node into `(gl, hl)` and `(gr, hr)`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda)) - gamma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegressionNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                RegressionNode::Leaf { value } => return *value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, RegressionNode::Leaf { .. }))
            .count()
    }
}

struct RegGrower<'a> {
    ds: &'a Dataset,
    g: &'a [f64],
    h: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<RegressionNode>,
    goes_left: Vec<bool>,
}

impl RegGrower<'_> {
    fn best(&self, lists: &[Vec<usize>], g_tot: f64, h_tot: f64) -> Option<(usize, f64, f64)> {
        let p = self.params;
        let mut best: Option<(usize, f64, f64)> = None;
        for (f, list) in lists.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in list.windows(2) {
                let (r, next) = (w[0], w[1]);
                gl += self.g[r];
                hl += self.h[r];
                let (lo, hi) = (self.ds.value(r, f), self.ds.value(next, f));
                if hi <= lo {
                    continue;
                }
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if hl < p.min_child_weight || hr < p.min_child_weight {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, p.lambda, p.gamma);
                if best.is_none_or(|(_, _, b)| gain > b) {
                    best = Some((f, midpoint(lo, hi), gain));
                }
            }
        }
        best.filter(|&(_, _, gain)| gain > MIN_GAIN)
    }

    fn grow(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let rows = &lists[0];
        let g_tot: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h_tot: f64 = rows.iter().map(|&r| self.h[r]).sum();
        self.nodes.push(RegressionNode::Leaf {
            value: leaf_weight(g_tot, h_tot, self.params.lambda),
        });
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best(&lists, g_tot, h_tot) else {
            return id;
        };
        for &r in &lists[0] {
            self.goes_left[r] = self.ds.value(r, feature) <= threshold;
        }
        let (l, r) = partition(lists, &self.goes_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = RegressionNode::Split {
            feature,
            threshold,
            left,
            right,
            gain,
        };
        id
    }
}

pub(crate) fn fit_regression_tree(
    ds: &Dataset,
    g: &[f64],
    h: &[f64],
    params: &GbtParams,
    presorted: &Presorted,
) -> RegressionTree {
    let mut grower = RegGrower {
        ds,
        g,
        h,
        params,
        nodes: Vec::new(),
        goes_left: vec![false; ds.n_rows()],
    };
    grower.grow(presorted.lists().to_vec(), 0);
    RegressionTree {
        nodes: grower.nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosted {
    /// `trees[round][class]`.
    pub trees: Vec<Vec<RegressionTree>>,
    pub learning_rate: f64,
    /// Mean training log-loss after each round.
    pub train_loss: Vec<f64>,
    pub n_classes: usize,
    pub n_features: usize,
}

impl GradientBoosted {
    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for round in &self.trees {
            for (sk, tree) in s.iter_mut().zip(round) {
                *sk += self.learning_rate * tree.predict_row(x);
            }
        }
        s
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }

    /// Total split gain per feature.
    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for tree in self.trees.iter().flatten() {
            for node in &tree.nodes {
                if let RegressionNode::Split { feature, gain, .. } = node {
                    imp[*feature] += gain;
                }
            }
        }
        imp
    }
}

/// Fit softmax gradient boosting. Raw scores start at zero.
pub fn fit_gbt(ds: &Dataset, params: &GbtParams) -> Result<GradientBoosted> {
    params.validate()?;
    let n = ds.n_rows();
    let k = ds.n_classes();
    let labels = ds.labels();
    let presorted = Presorted::new(ds);
    let mut scores = vec![vec![0.0; k]; n];
    let mut model = GradientBoosted {
        trees: Vec::with_capacity(params.n_estimators),
        learning_rate: params.learning_rate,
        train_loss: Vec::with_capacity(params.n_estimators),
        n_classes: k,
        n_features: ds.n_features(),
    };

    for _ in 0..params.n_estimators {
        let mut g = vec![vec![0.0; n]; k];
        let mut h = vec![vec![0.0; n]; k];
        for i in 0..n {
            let (gi, hi) = softmax_grad_hess(&scores[i], labels[i]);
            for c in 0..k {
                g[c][i] = gi[c];
                h[c][i] = hi[c];
            }
        }
        let round: Vec<RegressionTree> = (0..k)
            .into_par_iter()
            .map(|c| fit_regression_tree(ds, &g[c], &h[c], params, &presorted))
            .collect();
        for (i, s) in scores.iter_mut().enumerate() {
            for (sk, tree) in s.iter_mut().zip(&round) {
                *sk += params.learning_rate * tree.predict_row(ds.row(i));
            }
        }
        let loss = scores
            .iter()
            .zip(labels)
            .map(|(s, &y)| multiclass_log_loss(s, y))
            .sum::<f64>()
            / n as f64;
        model.train_loss.push(loss);
        model.trees.push(round);
    }
    Ok(model)
}
