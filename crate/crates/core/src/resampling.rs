//! SMOTE oversampling with exact same-class nearest neighbours.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteParams {
    pub k_neighbors: usize,
    /// Rows per class after balancing; defaults to the majority count.
    pub target_per_class: Option<usize>,
    pub seed: u64,
    /// Snap categorical coordinates to the nearest encoded level.
    pub round_categorical: bool,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_per_class: None,
            seed: 0,
            round_categorical: true,
        }
    }
}

/// Parents and interpolation weight of one synthetic row.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOrigin {
    pub class: usize,
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
    /// Interpolated coordinates before categorical rounding.
    pub unrounded: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` rows of `class_rows` (excluding `i`) nearest to row `i` by
/// Euclidean distance, nearest first; distance ties go to the lower row index.
pub fn knn_minority(ds: &Dataset, class_rows: &[usize], i: usize, k: usize) -> Vec<usize> {
    let xi = ds.row(i);
    let mut cands: Vec<(f64, usize)> = class_rows
        .iter()
        .filter(|&&r| r != i)
        .map(|&r| (sq_dist(xi, ds.row(r)), r))
        .collect();
    let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cands.len() > k {
        cands.select_nth_unstable_by(k, by);
        cands.truncate(k);
    }
    cands.sort_unstable_by(by);
    cands.into_iter().map(|(_, r)| r).collect()
}

/// Nearest level, ties to the smaller one. `levels` is sorted ascending.
fn snap(value: f64, levels: &[f64]) -> f64 {
    let mut best = levels[0];
    for &l in &levels[1..] {
        if (value - l).abs() < (value - best).abs() {
            best = l;
        }
    }
    best
}

/// SMOTE that also reports each synthetic row's parents.
pub fn smote_with_provenance(
    ds: &Dataset,
    params: &SmoteParams,
) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    if params.k_neighbors == 0 {
        return Err(Error::InvalidParam("k_neighbors must be at least 1".into()));
    }
    let counts = ds.class_counts();
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(Error::Data(format!(
                "class {c} has {n} rows; SMOTE needs at least 2 per class"
            )));
        }
    }
    let majority = *counts.iter().max().expect("K >= 2");
    let target = params.target_per_class.unwrap_or(majority);
    if target < majority {
        return Err(Error::InvalidParam(format!(
            "target_per_class {target} is below the largest class count {majority}"
        )));
    }

    let class_rows = ds.class_rows();
    let levels: Vec<Option<Vec<f64>>> = ds
        .features()
        .iter()
        .map(|f| if params.round_categorical { f.encoded_levels() } else { None })
        .collect();

    let mut origins = Vec::new();
    for (c, rows) in class_rows.iter().enumerate() {
        let need = target - rows.len();
        if need == 0 {
            continue;
        }
        let neighbors: Vec<Vec<usize>> = rows
            .par_iter()
            .map(|&r| knn_minority(ds, rows, r, params.k_neighbors))
            .collect();
        let made: Vec<SyntheticOrigin> = (0..need)
            .into_par_iter()
            .map(|j| {
                let mut rng = rng::stream(params.seed, &[rng::TAG_SMOTE, c as u64, j as u64]);
                let pick = rng.random_range(0..rows.len());
                let nbrs = &neighbors[pick];
                let neighbor = nbrs[rng.random_range(0..nbrs.len())];
                let u: f64 = rng.random();
                let (x, xn) = (ds.row(rows[pick]), ds.row(neighbor));
                let unrounded = x.iter().zip(xn).map(|(a, b)| a + u * (b - a)).collect();
                SyntheticOrigin {
                    class: c,
                    base: rows[pick],
                    neighbor,
                    u,
                    unrounded,
                }
            })
            .collect();
        origins.extend(made);
    }

    let mut x = Vec::with_capacity(origins.len() * ds.n_features());
    let mut y = Vec::with_capacity(origins.len());
    for o in &origins {
        x.extend(o.unrounded.iter().zip(&levels).map(|(&v, lv)| match lv {
            Some(levels) => snap(v, levels),
            None => v,
        }));
        y.push(o.class);
    }
    Ok((ds.with_appended(&x, &y)?, origins))
}

/// Oversample every class to `target_per_class` rows. Original rows come
/// first and are unchanged; synthetic rows follow, grouped by class.
pub fn smote(ds: &Dataset, params: &SmoteParams) -> Result<Dataset> {
    smote_with_provenance(ds, params).map(|(out, _)| out)
}
