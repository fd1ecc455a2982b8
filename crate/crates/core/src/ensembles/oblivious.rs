//! Gradient boosting over symmetric (oblivious) trees: every node on a level
//! shares one `(feature, threshold)` test and each leaf holds a vector of
//! per-class score increments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::{multiclass_log_loss, softmax, softmax_grad_hess};
use super::presort::{midpoint, Presorted};
use crate::data::Dataset;
use crate::error::{Error, Result};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObliviousParams {
    pub iterations: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub l2_leaf_reg: f64,
    /// Unused by the deterministic fit; kept so every model accepts a seed.
    pub seed: u64,
}

impl Default for ObliviousParams {
    fn default() -> Self {
        Self {
            iterations: 1000,
            depth: 6,
            learning_rate: 0.03,
            l2_leaf_reg: 3.0,
            seed: 0,
        }
    }
}

impl ObliviousParams {
    /// Tuned configuration: 1000 iterations, depth 8, learning rate 0.1.
    pub fn tuned() -> Self {
        Self {
            iterations: 1000,
            depth: 8,
            learning_rate: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParam("iterations must be at least 1".into()));
        }
        if self.depth == 0 || self.depth > 16 {
            return Err(Error::InvalidParam("depth must be between 1 and 16".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam("learning_rate must be positive".into()));
        }
        if !(self.l2_leaf_reg >= 0.0) {
            return Err(Error::InvalidParam("l2_leaf_reg must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObliviousLevel {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousTree {
    pub levels: Vec<ObliviousLevel>,
    /// `2^levels.len()` rows of per-class increments, already scaled by the
    /// learning rate.
    pub leaf_values: Vec<Vec<f64>>,
}

impl ObliviousTree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        self.levels.iter().fold(0, |idx, level| {
            idx * 2 + usize::from(x[level.feature] > level.threshold)
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousBoosted {
    pub trees: Vec<ObliviousTree>,
    /// Mean training log-loss after each iteration.
    pub train_loss: Vec<f64>,
    pub n_classes: usize,
    pub n_features: usize,
}

impl ObliviousBoosted {
    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (sk, v) in s.iter_mut().zip(&tree.leaf_values[tree.leaf_index(x)]) {
                *sk += v;
            }
        }
        s
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }

    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for level in self.trees.iter().flat_map(|t| &t.levels) {
            imp[level.feature] += level.gain;
        }
        imp
    }
}

#[inline]
fn term(g: f64, h: f64, l2: f64) -> f64 {
    let d = h + l2;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

/// Best level split for one feature: sweep rows in value order, moving each
/// row from the right to the left half of its current leaf and updating the
/// summed structure score of the affected leaf only.
fn scan_feature(
    ds: &Dataset,
    f: usize,
    order: &[usize],
    leaf_of: &[usize],
    g: &[Vec<f64>],
    h: &[Vec<f64>],
    totals: &[(Vec<f64>, Vec<f64>)],
    l2: f64,
) -> Option<(f64, f64)> {
    let k = g[0].len();
    let n_leaves = totals.len();
    let mut gl = vec![0.0; n_leaves * k];
    let mut hl = vec![0.0; n_leaves * k];
    let mut s: f64 = totals
        .iter()
        .map(|(gt, ht)| (0..k).map(|c| term(gt[c], ht[c], l2)).sum::<f64>())
        .sum();
    let mut best: Option<(f64, f64)> = None;
    for w in 0..order.len().saturating_sub(1) {
        let r = order[w];
        let leaf = leaf_of[r];
        let (gt, ht) = &totals[leaf];
        for c in 0..k {
            let j = leaf * k + c;
            let before = term(gl[j], hl[j], l2) + term(gt[c] - gl[j], ht[c] - hl[j], l2);
            gl[j] += g[r][c];
            hl[j] += h[r][c];
            let after = term(gl[j], hl[j], l2) + term(gt[c] - gl[j], ht[c] - hl[j], l2);
            s += after - before;
        }
        let (lo, hi) = (ds.value(r, f), ds.value(order[w + 1], f));
        if hi > lo && best.is_none_or(|(b, _)| s > b) {
            best = Some((s, midpoint(lo, hi)));
        }
    }
    best
}

fn leaf_totals(leaf_of: &[usize], n_leaves: usize, g: &[Vec<f64>], h: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let k = g[0].len();
    let mut totals = vec![(vec![0.0; k], vec![0.0; k]); n_leaves];
    for (r, &leaf) in leaf_of.iter().enumerate() {
        for c in 0..k {
            totals[leaf].0[c] += g[r][c];
            totals[leaf].1[c] += h[r][c];
        }
    }
    totals
}

fn fit_one_tree(
    ds: &Dataset,
    presorted: &Presorted,
    g: &[Vec<f64>],
    h: &[Vec<f64>],
    params: &ObliviousParams,
) -> ObliviousTree {
    let n = ds.n_rows();
    let l2 = params.l2_leaf_reg;
    let mut leaf_of = vec![0usize; n];
    let mut levels = Vec::new();
    for depth in 0..params.depth {
        let totals = leaf_totals(&leaf_of, 1 << depth, g, h);
        let base: f64 = totals
            .iter()
            .map(|(gt, ht)| gt.iter().zip(ht).map(|(&a, &b)| term(a, b, l2)).sum::<f64>())
            .sum();
        let candidates: Vec<Option<(f64, f64)>> = presorted
            .lists()
            .par_iter()
            .enumerate()
            .map(|(f, order)| scan_feature(ds, f, order, &leaf_of, g, h, &totals, l2))
            .collect();
        let mut best: Option<(usize, f64, f64)> = None;
        for (f, c) in candidates.into_iter().enumerate() {
            if let Some((s, thr)) = c {
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((f, thr, s));
                }
            }
        }
        // A level is added only when some feature can split; a flat
        // structure score is still accepted so the tree can reach full depth.
        let Some((feature, threshold, s)) = best else {
            break;
        };
        let gain = 0.5 * (s - base);
        levels.push(ObliviousLevel {
            feature,
            threshold,
            gain: if gain > MIN_GAIN { gain } else { 0.0 },
        });
        for (r, leaf) in leaf_of.iter_mut().enumerate() {
            *leaf = *leaf * 2 + usize::from(ds.value(r, feature) > threshold);
        }
    }
    let totals = leaf_totals(&leaf_of, 1 << levels.len(), g, h);
    let leaf_values = totals
        .into_iter()
        .map(|(gt, ht)| {
            gt.iter()
                .zip(&ht)
                .map(|(&a, &b)| {
                    let d = b + l2;
                    if d > 0.0 {
                        -params.learning_rate * a / d
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    ObliviousTree { levels, leaf_values }
}

/// Fit an oblivious-tree booster with softmax loss. Each iteration grows one
/// symmetric tree shared by all classes; leaf values are per-class Newton
/// steps `-G / (H + l2)` scaled by the learning rate.
pub fn fit_oblivious_gbt(ds: &Dataset, params: &ObliviousParams) -> Result<ObliviousBoosted> {
    params.validate()?;
    let n = ds.n_rows();
    let k = ds.n_classes();
    let labels = ds.labels();
    let presorted = Presorted::new(ds);
    let mut scores = vec![vec![0.0; k]; n];
    let mut model = ObliviousBoosted {
        trees: Vec::with_capacity(params.iterations),
        train_loss: Vec::with_capacity(params.iterations),
        n_classes: k,
        n_features: ds.n_features(),
    };
    for _ in 0..params.iterations {
        let (g, h): (Vec<Vec<f64>>, Vec<Vec<f64>>) = scores
            .iter()
            .zip(labels)
            .map(|(s, &y)| softmax_grad_hess(s, y))
            .unzip();
        let tree = fit_one_tree(ds, &presorted, &g, &h, params);
        for (i, s) in scores.iter_mut().enumerate() {
            for (sk, v) in s.iter_mut().zip(&tree.leaf_values[tree.leaf_index(ds.row(i))]) {
                *sk += v;
            }
        }
        let loss = scores
            .iter()
            .zip(labels)
            .map(|(s, &y)| multiclass_log_loss(s, y))
            .sum::<f64>()
            / n as f64;
        model.train_loss.push(loss);
        model.trees.push(tree);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, FeatureSpec, GeneratorSpec};

    #[test]
    fn constant_features_give_one_global_newton_step() {
        let features = vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("b")];
        let y = vec![0, 1, 1, 2, 2, 2];
        let ds = Dataset::new(vec![1.0; 12], y, features, 3).unwrap();
        let params = ObliviousParams {
            iterations: 1,
            ..ObliviousParams::default()
        };
        let model = fit_oblivious_gbt(&ds, &params).unwrap();
        let tree = &model.trees[0];
        assert!(tree.levels.is_empty());
        assert_eq!(tree.n_leaves(), 1);
        // At zero scores p = 1/3 and h = 2/9 for every row and class.
        let (n, p, hsum) = (6.0, 1.0 / 3.0, 6.0 * 2.0 / 9.0);
        for (c, count) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            let g = n * p - count;
            let expect = -0.03 * g / (hsum + 3.0);
            assert!((tree.leaf_values[0][c] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_one_trees_are_stumps() {
        let spec = GeneratorSpec::edhs_like(0.8, &[0.25; 4]);
        let ds = generate_synthetic(&spec, 200, 1).unwrap();
        let params = ObliviousParams {
            iterations: 5,
            depth: 1,
            learning_rate: 0.3,
            ..ObliviousParams::default()
        };
        let model = fit_oblivious_gbt(&ds, &params).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.levels.len(), 1);
            assert_eq!(tree.n_leaves(), 2);
        }
    }

    #[test]
    fn level_choice_matches_brute_force() {
        let spec = GeneratorSpec::edhs_like(0.8, &[0.25; 4]);
        let ds = generate_synthetic(&spec, 120, 3).unwrap();
        let params = ObliviousParams {
            iterations: 1,
            depth: 1,
            ..ObliviousParams::default()
        };
        let tree = &fit_oblivious_gbt(&ds, &params).unwrap().trees[0];
        let (g, h): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
            ds.labels().iter().map(|&y| softmax_grad_hess(&[0.0; 4], y)).unzip();
        let l2 = params.l2_leaf_reg;
        let score_of = |f: usize, thr: f64| {
            let mut sums = [[0.0; 8]; 2];
            for r in 0..ds.n_rows() {
                let side = usize::from(ds.value(r, f) > thr);
                for c in 0..4 {
                    sums[side][c] += g[r][c];
                    sums[side][4 + c] += h[r][c];
                }
            }
            (0..2)
                .flat_map(|s| (0..4).map(move |c| (s, c)))
                .map(|(s, c)| sums[s][c].powi(2) / (sums[s][4 + c] + l2))
                .sum::<f64>()
        };
        let chosen = score_of(tree.levels[0].feature, tree.levels[0].threshold);
        for f in 0..ds.n_features() {
            let mut vals: Vec<f64> = ds.column(f);
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                assert!(score_of(f, midpoint(w[0], w[1])) <= chosen + 1e-9);
            }
        }
    }

    #[test]
    fn training_loss_decreases() {
        let spec = GeneratorSpec::edhs_like(0.8, &[0.25; 4]);
        let ds = generate_synthetic(&spec, 300, 5).unwrap();
        let params = ObliviousParams {
            iterations: 30,
            depth: 4,
            learning_rate: 0.1,
            ..ObliviousParams::default()
        };
        let model = fit_oblivious_gbt(&ds, &params).unwrap();
        assert!(model.train_loss[0] < 4f64.ln());
        for w in model.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
