use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary AUC by the rank statistic, with average ranks for tied scores.
/// `None` when either class is absent.
pub fn binary_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&r| positive[r]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocAuc {
    /// `None` where the class has no positives or no negatives.
    pub per_class: Vec<Option<f64>>,
    /// Support-weighted mean over defined classes.
    pub weighted: Option<f64>,
    pub macro_avg: Option<f64>,
}

/// One-vs-rest AUC of each class's probability column.
pub fn roc_auc_ovr(y_true: &[usize], probas: &[Vec<f64>], n_classes: usize) -> Result<RocAuc> {
    if y_true.len() != probas.len() {
        return Err(Error::InvalidParam("labels and probability rows differ in length".into()));
    }
    if probas.iter().any(|p| p.len() != n_classes) {
        return Err(Error::InvalidParam(format!("probability rows must have {n_classes} entries")));
    }
    let mut per_class = Vec::with_capacity(n_classes);
    let (mut wsum, mut wtot, mut msum, mut defined) = (0.0, 0.0, 0.0, 0usize);
    for k in 0..n_classes {
        let positive: Vec<bool> = y_true.iter().map(|&y| y == k).collect();
        let scores: Vec<f64> = probas.iter().map(|p| p[k]).collect();
        let auc = binary_auc(&positive, &scores);
        if let Some(a) = auc {
            let support = positive.iter().filter(|&&p| p).count() as f64;
            wsum += support * a;
            wtot += support;
            msum += a;
            defined += 1;
        }
        per_class.push(auc);
    }
    Ok(RocAuc {
        per_class,
        weighted: (defined > 0).then(|| wsum / wtot),
        macro_avg: (defined > 0).then(|| msum / defined as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    /// Empty when the class has no positives or no negatives.
    pub points: Vec<(f64, f64)>,
    pub auc: Option<f64>,
}

/// ROC points for class `k` obtained by lowering the threshold through each
/// distinct score.
pub fn roc_curve_points(y_true: &[usize], scores: &[f64], k: usize) -> RocCurve {
    let positive: Vec<bool> = y_true.iter().map(|&y| y == k).collect();
    let auc = binary_auc(&positive, scores);
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if auc.is_none() {
        return RocCurve { class: k, points: Vec::new(), auc };
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    RocCurve { class: k, points, auc }
}

/// Area under a piecewise-linear curve by the trapezoid rule.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn auc(y: &[usize], s: &[f64]) -> f64 {
        let pos: Vec<bool> = y.iter().map(|&v| v == 1).collect();
        binary_auc(&pos, s).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]), 1.0);
        assert_eq!(auc(&[0, 0, 1, 1], &[0.5; 4]), 0.5);
        assert_eq!(auc(&[0, 0, 1, 1], &[0.9, 0.8, 0.2, 0.1]), 0.0);
        assert!(binary_auc(&[true, true], &[0.1, 0.2]).is_none());
    }

    #[test]
    fn curve_examples() {
        let c = roc_curve_points(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9], 1);
        assert!(c.points.contains(&(0.0, 1.0)));
        assert_eq!(c.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.points.last(), Some(&(1.0, 1.0)));

        let c = roc_curve_points(&[0, 1, 0, 1], &[0.3; 4], 1);
        assert_eq!(c.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(trapezoid_area(&c.points), 0.5);
    }

    #[test]
    fn undefined_class_is_excluded() {
        let probas = vec![vec![0.7, 0.3, 0.0], vec![0.2, 0.8, 0.0]];
        let r = roc_auc_ovr(&[0, 1], &probas, 3).unwrap();
        assert_eq!(r.per_class, vec![Some(1.0), Some(1.0), None]);
        assert_eq!(r.weighted, Some(1.0));
    }

    proptest! {
        #[test]
        fn trapezoid_matches_rank_statistic(scores in prop::collection::hash_set(0u32..1_000_000, 4..60), seed: u64) {
            let scores: Vec<f64> = scores.into_iter().map(|v| v as f64 / 1e6).collect();
            let y: Vec<usize> = (0..scores.len()).map(|i| ((seed >> (i % 64)) as usize + i) % 2).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            let c = roc_curve_points(&y, &scores, 1);
            prop_assert!((trapezoid_area(&c.points) - c.auc.unwrap()).abs() < 1e-9);
            for w in c.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auc(&y, &scores) + auc(&y, &neg) - 1.0).abs() < 1e-12);
            let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0).collect();
            prop_assert_eq!(auc(&y, &scores), auc(&y, &cubed));
        }
    }
}
