//! Per-feature row orderings shared by the exact split searches.

use crate::data::Dataset;

/// Threshold between two consecutive distinct values that sends `lo` left
/// and `hi` right under the `x <= threshold` rule.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// For each feature, all row indices sorted by `(value, row)`.
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    lists: Vec<Vec<usize>>,
}

impl Presorted {
    pub fn new(ds: &Dataset) -> Self {
        let n = ds.n_rows();
        let lists = (0..ds.n_features())
            .map(|f| {
                let mut rows: Vec<usize> = (0..n).collect();
                rows.sort_unstable_by(|&a, &b| {
                    ds.value(a, f).total_cmp(&ds.value(b, f)).then(a.cmp(&b))
                });
                rows
            })
            .collect();
        Self { lists }
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    /// Orderings restricted to rows with positive weight.
    pub fn positive(&self, weights: &[f64]) -> Vec<Vec<usize>> {
        self.lists
            .iter()
            .map(|l| l.iter().copied().filter(|&r| weights[r] > 0.0).collect())
            .collect()
    }
}

/// Sort the given rows by one feature, ties by row index.
pub(crate) fn sort_rows(ds: &Dataset, rows: &[usize], feature: usize) -> Vec<usize> {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable_by(|&a, &b| {
        ds.value(a, feature)
            .total_cmp(&ds.value(b, feature))
            .then(a.cmp(&b))
    });
    sorted
}

/// Split every per-feature ordering by the `goes_left` flags, keeping order.
pub(crate) fn partition(
    lists: Vec<Vec<usize>>,
    goes_left: &[bool],
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut left = Vec::with_capacity(lists.len());
    let mut right = Vec::with_capacity(lists.len());
    for list in lists {
        let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&row| goes_left[row]);
        left.push(l);
        right.push(r);
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_stays_below_upper_value() {
        assert_eq!(midpoint(0.0, 1.0), 0.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(m >= a && m < b);
    }
}
