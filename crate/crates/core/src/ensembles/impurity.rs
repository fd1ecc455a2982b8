use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

/// Impurity of a weighted class histogram whose total is already known.
#[inline]
pub(crate) fn impurity_with_total(counts: &[f64], total: f64, criterion: Criterion) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => {
            let sq: f64 = counts
                .iter()
                .map(|&c| {
                    let p = c.max(0.0) / total;
                    p * p
                })
                .sum();
            (1.0 - sq).max(0.0)
        }
        Criterion::Entropy => {
            let h: f64 = counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| {
                    let p = c / total;
                    -p * p.log2()
                })
                .sum();
            h.max(0.0)
        }
    }
}

/// Gini (`1 - Σp²`) or entropy in bits (`-Σ p log2 p`) of class weights.
pub fn impurity(counts: &[f64], criterion: Criterion) -> Result<f64> {
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidParam("class weights must be finite and non-negative".into()));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParam("impurity of an empty node".into()));
    }
    Ok(impurity_with_total(counts, total, criterion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!((impurity(&[5.0, 5.0, 5.0, 5.0], Criterion::Gini).unwrap() - 0.75).abs() < 1e-15);
        assert!((impurity(&[8.0, 8.0], Criterion::Entropy).unwrap() - 1.0).abs() < 1e-15);
        // 1 - (0.36 + 0.04 + 0.01 + 0.01)
        assert!((impurity(&[6.0, 2.0, 1.0, 1.0], Criterion::Gini).unwrap() - 0.58).abs() < 1e-12);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(impurity(&[0.0, 0.0], Criterion::Gini).is_err());
        assert!(impurity(&[1.0, -1.0], Criterion::Gini).is_err());
    }

    proptest! {
        #[test]
        fn bounds_hold(counts in prop::collection::vec((0u32..100).prop_map(f64::from), 2..6)) {
            prop_assume!(counts.iter().sum::<f64>() > 1e-6);
            let k = counts.len() as f64;
            let g = impurity(&counts, Criterion::Gini).unwrap();
            let e = impurity(&counts, Criterion::Entropy).unwrap();
            prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / k + 1e-12);
            prop_assert!(e >= 0.0 && e <= k.log2() + 1e-12);
            let present = counts.iter().filter(|&&c| c > 0.0).count();
            if present == 1 {
                prop_assert_eq!(g, 0.0);
                prop_assert_eq!(e, 0.0);
            } else {
                prop_assert!(g > 0.0 && e > 0.0);
            }
        }
    }
}
