use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Row indices `(train, test)` of a stratified split, each sorted ascending.
///
/// Each class gets `floor(f * n_k)` test rows; the units still missing to
/// reach `round(f * n)` go to the classes with the largest fractional
/// remainders, lowest class first on ties. Which rows land in the test set is
/// decided by a per-class seeded shuffle.
pub fn stratified_split_indices(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let classes = group_by_class(labels, n_classes);
    for (k, rows) in classes.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::Data(format!(
                "class {k} has {} rows; a stratified split needs at least 2",
                rows.len()
            )));
        }
    }
    let quotas: Vec<f64> = classes
        .iter()
        .map(|rows| test_fraction * rows.len() as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let target = (test_fraction * labels.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = target.saturating_sub(take.iter().sum());
    for &k in order.iter().take(missing) {
        take[k] += 1;
    }
    for (k, (&t, rows)) in take.iter().zip(&classes).enumerate() {
        if t == 0 || t >= rows.len() {
            return Err(Error::Data(format!(
                "test fraction {test_fraction} leaves class {k} empty on one side ({t} of {} rows in test)",
                rows.len()
            )));
        }
    }

    let mut train = Vec::with_capacity(labels.len() - target);
    let mut test = Vec::with_capacity(target);
    for (k, mut rows) in classes.into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[rng::TAG_SPLIT, k as u64]);
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..take[k]]);
        train.extend_from_slice(&rows[take[k]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified `(train, test)` datasets; see [`stratified_split_indices`].
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(ds.labels(), ds.n_classes(), test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Partition row indices into `k` stratified folds, each sorted ascending.
///
/// Rows of each class are shuffled and dealt round-robin; the dealing position
/// carries over from one class to the next, so per-class fold sizes differ by
/// at most one and total fold sizes also differ by at most one. A class with
/// fewer than `k` rows is simply absent from some folds; callers that need
/// every class in every fold check that themselves.
pub fn stratified_kfold(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k-fold needs k >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Data(format!(
            "{} rows cannot fill {k} folds",
            labels.len()
        )));
    }
    let classes = group_by_class(labels, n_classes);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (c, mut rows) in classes.into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[rng::TAG_KFOLD, c as u64]);
        rows.shuffle(&mut rng);
        for row in rows {
            folds[next].push(row);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Error unless every class has at least `k` rows, so each fold sees every class.
pub fn require_class_size(labels: &[usize], n_classes: usize, k: usize) -> Result<()> {
    for (c, rows) in group_by_class(labels, n_classes).iter().enumerate() {
        if rows.len() < k {
            return Err(Error::Data(format!(
                "class {c} has {} rows, fewer than {k} folds",
                rows.len()
            )));
        }
    }
    Ok(())
}

/// Rows of every fold except `held_out`, sorted ascending.
pub fn fold_train_rows(folds: &[Vec<usize>], held_out: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    rows.sort_unstable();
    rows
}

fn group_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        classes[y].push(i);
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn balanced(per_class: usize, k: usize) -> Vec<usize> {
        (0..per_class * k).map(|i| i % k).collect()
    }

    fn per_class(labels: &[usize], rows: &[usize], k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &r in rows {
            c[labels[r]] += 1;
        }
        c
    }

    #[test]
    fn full_size_balanced_split() {
        let y = balanced(11_041, 4);
        let (train, test) = stratified_split_indices(&y, 4, 0.2, 7).unwrap();
        assert_eq!(test.len(), 8_833);
        assert_eq!(train.len() + test.len(), 44_164);
        assert_eq!(per_class(&y, &test, 4), vec![2_209, 2_208, 2_208, 2_208]);
    }

    #[test]
    fn tiny_split_and_determinism() {
        let y = balanced(5, 2);
        let (_, test) = stratified_split_indices(&y, 2, 0.2, 1).unwrap();
        assert_eq!(per_class(&y, &test, 2), vec![1, 1]);
        let again = stratified_split_indices(&y, 2, 0.2, 1).unwrap();
        assert_eq!(again.1, test);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let y = balanced(2, 2);
        assert!(stratified_split_indices(&y, 2, 0.1, 0).is_err());
        assert!(stratified_split_indices(&y, 2, 1.0, 0).is_err());
        assert!(stratified_split_indices(&[0, 0, 1], 2, 0.5, 0).is_err());
    }

    #[test]
    fn kfold_examples() {
        let y = balanced(5, 2);
        let folds = stratified_kfold(&y, 2, 10, 3).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));

        let y = balanced(25, 4);
        let folds = stratified_kfold(&y, 4, 10, 3).unwrap();
        for fold in &folds {
            assert!(per_class(&y, fold, 4).iter().all(|&c| c == 2 || c == 3));
        }
        assert!(stratified_kfold(&balanced(2, 2), 2, 5, 0).is_err());
    }

    proptest! {
        #[test]
        fn kfold_partitions_rows(counts in prop::collection::vec(5usize..40, 2..5), k in 2usize..6, seed: u64) {
            let y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
            let n_classes = counts.len();
            let folds = stratified_kfold(&y, n_classes, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            for c in 0..n_classes {
                let sizes: Vec<usize> = folds.iter().map(|f| per_class(&y, f, n_classes)[c]).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn split_is_near_proportional(counts in prop::collection::vec(4usize..200, 2..5), f in 0.15f64..0.5, seed: u64) {
            let y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
            let (train, test) = stratified_split_indices(&y, counts.len(), f, seed).unwrap();
            prop_assert_eq!(test.len(), (f * y.len() as f64).round() as usize);
            prop_assert_eq!(train.len() + test.len(), y.len());
            let got = per_class(&y, &test, counts.len());
            for (c, &n) in counts.iter().enumerate() {
                prop_assert!((got[c] as f64 - f * n as f64).abs() < 1.0 + 1e-9);
            }
        }
    }
}
