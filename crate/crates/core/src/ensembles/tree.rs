//! Weighted CART classification trees with exact threshold search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::impurity::{impurity_with_total, Criterion};
use super::presort::{midpoint, partition, sort_rows, Presorted};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Gains at or below this are treated as "no useful split".
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).clamp(1, n_features),
            MaxFeatures::Count(c) => c.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_leaf_nodes: Option<usize>,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            max_leaf_nodes: None,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    /// Depth-one tree, the classic boosting weak learner.
    pub fn stump() -> Self {
        Self {
            max_depth: Some(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParam("min_samples_split must be at least 2".into()));
        }
        if self.max_leaf_nodes == Some(0) {
            return Err(Error::InvalidParam("max_leaf_nodes must be positive".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::InvalidParam("max_features count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        weight: f64,
        /// Impurity decrease weighted by the node's share of the root weight.
        improvement: f64,
    },
    Leaf {
        distribution: Vec<f64>,
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl DecisionTree {
    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { distribution, .. } => return distribution,
            }
        }
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        self.leaf_distribution(x).to_vec()
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        super::argmax(self.leaf_distribution(x))
    }

    /// Summed weighted impurity decrease per feature.
    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Split {
                feature,
                improvement,
                ..
            } = node
            {
                imp[*feature] += improvement;
            }
        }
        imp
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

struct NodeStats {
    counts: Vec<f64>,
    total: f64,
    impurity: f64,
    n_rows: usize,
}

impl NodeStats {
    fn of(ds: &Dataset, rows: &[usize], weights: &[f64], criterion: Criterion) -> Self {
        let mut counts = vec![0.0; ds.n_classes()];
        for &r in rows {
            counts[ds.labels()[r]] += weights[r];
        }
        let total: f64 = counts.iter().sum();
        Self {
            impurity: impurity_with_total(&counts, total, criterion),
            counts,
            total,
            n_rows: rows.len(),
        }
    }
}

/// Sweep one feature's sorted rows, updating `best` on strictly larger gain.
fn scan_feature(
    ds: &Dataset,
    feature: usize,
    sorted: &[usize],
    weights: &[f64],
    parent: &NodeStats,
    criterion: Criterion,
    best: &mut Option<SplitCandidate>,
) {
    let k = parent.counts.len();
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    let mut left_total = 0.0;
    let labels = ds.labels();
    for i in 0..sorted.len().saturating_sub(1) {
        let r = sorted[i];
        left[labels[r]] += weights[r];
        left_total += weights[r];
        let v = ds.value(r, feature);
        let next = ds.value(sorted[i + 1], feature);
        if next <= v {
            continue;
        }
        for c in 0..k {
            right[c] = (parent.counts[c] - left[c]).max(0.0);
        }
        let right_total = (parent.total - left_total).max(0.0);
        let gain = parent.impurity
            - (left_total / parent.total) * impurity_with_total(&left, left_total, criterion)
            - (right_total / parent.total) * impurity_with_total(&right, right_total, criterion);
        if best.is_none_or(|b| gain > b.gain) {
            *best = Some(SplitCandidate {
                feature,
                threshold: midpoint(v, next),
                gain,
            });
        }
    }
}

fn sample_features(n_features: usize, max_features: MaxFeatures, rng: &mut impl Rng) -> Vec<usize> {
    let m = max_features.resolve(n_features);
    if m >= n_features {
        return (0..n_features).collect();
    }
    let mut picked = rand::seq::index::sample(rng, n_features, m).into_vec();
    picked.sort_unstable();
    picked
}

/// Best weighted-impurity split of `rows`, searching a feature subset drawn
/// per `params.max_features`. Rows with zero weight are ignored.
///
/// Thresholds sit at midpoints of consecutive distinct values; ties go to the
/// lowest feature index, then the lowest threshold. `None` means no split
/// improves the parent.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    weights: &[f64],
    params: &TreeParams,
    rng: &mut impl Rng,
) -> Option<SplitCandidate> {
    let rows: Vec<usize> = rows.iter().copied().filter(|&r| weights[r] > 0.0).collect();
    if rows.len() < params.min_samples_split {
        return None;
    }
    let stats = NodeStats::of(ds, &rows, weights, params.criterion);
    let features = sample_features(ds.n_features(), params.max_features, rng);
    let mut best = None;
    for f in features {
        let sorted = sort_rows(ds, &rows, f);
        scan_feature(ds, f, &sorted, weights, &stats, params.criterion, &mut best);
    }
    best.filter(|b| b.gain > MIN_GAIN)
}

struct Pending {
    id: usize,
    depth: usize,
    lists: Vec<Vec<usize>>,
    stats: NodeStats,
    split: Option<SplitCandidate>,
}

// Best-first order: larger gain first, then earlier node.
impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        let g = |p: &Pending| p.split.map_or(f64::NEG_INFINITY, |s| s.gain);
        g(self)
            .total_cmp(&g(other))
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Grower<'a, R: Rng> {
    ds: &'a Dataset,
    weights: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    goes_left: Vec<bool>,
    root_weight: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn make_pending(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> Pending {
        let id = self.nodes.len();
        let stats = NodeStats::of(self.ds, &lists[0], self.weights, self.params.criterion);
        self.nodes.push(leaf(&stats));
        let splittable = self.params.max_depth.is_none_or(|d| depth < d)
            && stats.n_rows >= self.params.min_samples_split
            && stats.impurity > 0.0;
        let split = if splittable {
            let features = sample_features(self.ds.n_features(), self.params.max_features, self.rng);
            let mut best = None;
            for f in features {
                scan_feature(
                    self.ds,
                    f,
                    &lists[f],
                    self.weights,
                    &stats,
                    self.params.criterion,
                    &mut best,
                );
            }
            best.filter(|b| b.gain > MIN_GAIN)
        } else {
            None
        };
        Pending {
            id,
            depth,
            lists,
            stats,
            split,
        }
    }

    /// Turn a pending node into a split node and return its two children.
    fn expand(&mut self, node: Pending) -> (Pending, Pending) {
        let split = node.split.expect("expand requires a split");
        for &r in &node.lists[0] {
            self.goes_left[r] = self.ds.value(r, split.feature) <= split.threshold;
        }
        let (left_lists, right_lists) = partition(node.lists, &self.goes_left);
        let left = self.make_pending(left_lists, node.depth + 1);
        let right = self.make_pending(right_lists, node.depth + 1);
        self.nodes[node.id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left.id,
            right: right.id,
            weight: node.stats.total,
            improvement: node.stats.total / self.root_weight * split.gain,
        };
        (left, right)
    }
}

fn leaf(stats: &NodeStats) -> TreeNode {
    TreeNode::Leaf {
        distribution: stats.counts.iter().map(|c| c / stats.total).collect(),
        weight: stats.total,
    }
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidParam(format!(
            "expected {n} sample weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParam("sample weights must be finite and non-negative".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParam("sample weights are all zero".into()));
    }
    Ok(())
}

pub(crate) fn grow_tree<R: Rng>(
    ds: &Dataset,
    weights: &[f64],
    params: &TreeParams,
    rng: &mut R,
    presorted: &Presorted,
) -> Result<DecisionTree> {
    params.validate()?;
    check_weights(weights, ds.n_rows())?;
    let root_lists = presorted.positive(weights);
    let root_weight: f64 = root_lists[0].iter().map(|&r| weights[r]).sum();
    let mut grower = Grower {
        ds,
        weights,
        params,
        rng,
        nodes: Vec::new(),
        goes_left: vec![false; ds.n_rows()],
        root_weight,
    };
    let root = grower.make_pending(root_lists, 0);

    match params.max_leaf_nodes {
        None => {
            let mut stack = vec![root];
            while let Some(node) = stack.pop() {
                if node.split.is_some() {
                    let (left, right) = grower.expand(node);
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        Some(max_leaves) => {
            let mut heap = BinaryHeap::new();
            heap.push(root);
            let mut leaves = 1;
            while leaves < max_leaves {
                let Some(node) = heap.pop() else { break };
                if node.split.is_none() {
                    break;
                }
                let (left, right) = grower.expand(node);
                leaves += 1;
                heap.push(left);
                heap.push(right);
            }
        }
    }

    Ok(DecisionTree {
        nodes: grower.nodes,
        n_features: ds.n_features(),
        n_classes: ds.n_classes(),
    })
}

/// Fit a weighted CART tree. Leaves store the weighted class distribution.
pub fn fit_tree(ds: &Dataset, weights: &[f64], params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    let mut rng: StreamRng = rng::stream(seed, &[rng::TAG_TREE]);
    grow_tree(ds, weights, params, &mut rng, &Presorted::new(ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;
    use crate::ensembles::impurity::impurity;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dataset(x: Vec<f64>, y: Vec<usize>, d: usize, k: usize) -> Dataset {
        let features = (0..d).map(|j| FeatureSpec::numeric(&format!("f{j}"))).collect();
        Dataset::new(x, y, features, k).unwrap()
    }

    #[test]
    fn two_point_split() {
        let ds = dataset(vec![0.0, 1.0], vec![0, 1], 1, 2);
        let mut rng = StreamRng::seed_from_u64(0);
        let s = best_split(&ds, &[0, 1], &[1.0, 1.0], &TreeParams::default(), &mut rng).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_features_give_no_split() {
        let ds = dataset(vec![3.0; 8], vec![0, 1, 0, 1], 2, 2);
        let mut rng = StreamRng::seed_from_u64(0);
        assert!(best_split(&ds, &[0, 1, 2, 3], &[1.0; 4], &TreeParams::default(), &mut rng).is_none());
    }

    #[test]
    fn zero_weight_rows_are_invisible() {
        let x = vec![0.0, 5.0, 1.0, 6.0, 2.0, 7.0, 3.0, 8.0, 4.0, 9.0, 10.0, 0.5];
        let y = vec![0, 1, 0, 1, 2, 3];
        let full = dataset(x.clone(), y.clone(), 2, 4);
        let mut w = vec![1.0; 6];
        w[2] = 0.0;
        w[4] = 0.0;
        let kept: Vec<usize> = (0..6).filter(|&i| w[i] > 0.0).collect();
        let reduced = full.subset(&kept);
        let p = TreeParams::default();
        let a = best_split(&full, &[0, 1, 2, 3, 4, 5], &w, &p, &mut StreamRng::seed_from_u64(1));
        let b = best_split(&reduced, &[0, 1, 2, 3], &[1.0; 4], &p, &mut StreamRng::seed_from_u64(1));
        assert_eq!(a, b);
    }

    #[test]
    fn unconstrained_tree_fits_separable_data() {
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<usize> = (0..n).map(|i| (i * 7 % 13) % 4).collect();
        let ds = dataset(x, y.clone(), 1, 4);
        let tree = fit_tree(&ds, &vec![1.0; n], &TreeParams::default(), 0).unwrap();
        let correct = (0..n).filter(|&i| tree.predict_row(ds.row(i)) == y[i]).count();
        assert_eq!(correct, n);
    }

    #[test]
    fn depth_zero_is_weighted_majority_leaf() {
        let ds = dataset(vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1, 2], 1, 3);
        let params = TreeParams {
            max_depth: Some(0),
            ..TreeParams::default()
        };
        let tree = fit_tree(&ds, &[1.0, 1.0, 3.0, 1.0], &params, 0).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        for i in 0..4 {
            assert_eq!(tree.predict_row(ds.row(i)), 1);
        }
    }

    #[test]
    fn all_weight_on_one_sample() {
        let ds = dataset(vec![0.0, 1.0, 2.0, 3.0], vec![0, 1, 2, 3], 1, 4);
        let tree = fit_tree(&ds, &[0.0, 0.0, 1.0, 0.0], &TreeParams::default(), 0).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_row(&[0.0]), 2);
    }

    #[test]
    fn invalid_weights_rejected() {
        let ds = dataset(vec![0.0, 1.0], vec![0, 1], 1, 2);
        assert!(fit_tree(&ds, &[0.0, 0.0], &TreeParams::default(), 0).is_err());
        assert!(fit_tree(&ds, &[1.0, -1.0], &TreeParams::default(), 0).is_err());
        assert!(fit_tree(&ds, &[1.0], &TreeParams::default(), 0).is_err());
    }

    #[test]
    fn max_leaf_nodes_bounds_leaves() {
        let n = 200;
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64).collect();
        let y: Vec<usize> = (0..n).map(|i| (i * 11 % 17) % 4).collect();
        let ds = dataset(x, y, 1, 4);
        for cap in [1, 2, 5, 17] {
            let params = TreeParams {
                max_leaf_nodes: Some(cap),
                ..TreeParams::default()
            };
            let tree = fit_tree(&ds, &vec![1.0; n], &params, 0).unwrap();
            assert!(tree.n_leaves() <= cap);
            if cap > 1 {
                assert_eq!(tree.n_leaves(), cap);
            }
        }
    }

    #[test]
    fn single_split_importance() {
        let ds = dataset(
            vec![9.0, 9.0, 0.0, 9.0, 9.0, 1.0, 9.0, 9.0, 0.0, 9.0, 9.0, 1.0],
            vec![0, 1, 0, 1],
            3,
            2,
        );
        let tree = fit_tree(&ds, &[1.0; 4], &TreeParams::default(), 0).unwrap();
        let imp = tree.raw_importance();
        assert_eq!(imp[0], 0.0);
        assert_eq!(imp[1], 0.0);
        assert!(imp[2] > 0.0);
    }

    /// Every (feature, threshold) pair evaluated by direct summation.
    fn brute_force_best(ds: &Dataset, w: &[f64], criterion: Criterion) -> Option<(usize, f64, f64)> {
        let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| w[r] > 0.0).collect();
        let hist = |subset: &[usize]| {
            let mut c = vec![0.0; ds.n_classes()];
            for &r in subset {
                c[ds.labels()[r]] += w[r];
            }
            c
        };
        let total: f64 = rows.iter().map(|&r| w[r]).sum();
        let parent = impurity(&hist(&rows), criterion).unwrap();
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..ds.n_features() {
            let mut values: Vec<f64> = rows.iter().map(|&r| ds.value(r, f)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for pair in values.windows(2) {
                let t = midpoint(pair[0], pair[1]);
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&row| ds.value(row, f) <= t);
                let wl: f64 = l.iter().map(|&i| w[i]).sum();
                let wr: f64 = r.iter().map(|&i| w[i]).sum();
                let gain = parent
                    - wl / total * impurity(&hist(&l), criterion).unwrap()
                    - wr / total * impurity(&hist(&r), criterion).unwrap();
                if best.is_none_or(|b| gain > b.2 + 1e-12) {
                    best = Some((f, t, gain));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn best_split_matches_exhaustive_search(
            n in 2usize..30,
            d in 1usize..=4,
            seed in any::<u64>(),
            entropy in any::<bool>(),
        ) {
            let mut r = StreamRng::seed_from_u64(seed);
            let x: Vec<f64> = (0..n * d).map(|_| r.random_range(0..6) as f64).collect();
            let y: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let w: Vec<f64> = (0..n).map(|_| r.random_range(0..4) as f64).collect();
            prop_assume!(w.iter().filter(|&&v| v > 0.0).count() >= 2);
            let ds = dataset(x, y, d, 3);
            let criterion = if entropy { Criterion::Entropy } else { Criterion::Gini };
            let params = TreeParams { criterion, ..TreeParams::default() };
            let rows: Vec<usize> = (0..n).collect();
            let got = best_split(&ds, &rows, &w, &params, &mut r);
            let oracle = brute_force_best(&ds, &w, criterion);
            match (got, oracle) {
                (Some(s), Some((_, _, g))) => {
                    prop_assert!(s.gain >= 0.0);
                    prop_assert!((s.gain - g).abs() < 1e-9, "gain {} vs oracle {}", s.gain, g);
                }
                (None, Some((_, _, g))) => prop_assert!(g <= 1e-9),
                (None, None) => {}
                (Some(s), None) => prop_assert!(false, "split {:?} with no candidates", s),
            }
        }
    }
}
