use crate::{Error, Result};

/// Class counts `[negatives, positives]`.
pub type ClassCounts = [usize; 2];

/// Gini impurity `1 - Σ p_c²`; zero for an empty node.
pub fn gini_impurity(counts: ClassCounts) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - (p0 * p0 + p1 * p1)
}

/// Impurity decrease of splitting `parent` into `left` and `right`:
/// `g(parent) - (n_L/n)·g(left) - (n_R/n)·g(right)`.
pub fn gini_gain(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> Result<f64> {
    let n = parent[0] + parent[1];
    if n == 0 {
        return Err(Error::InvalidArgument("gini gain of an empty node".into()));
    }
    if left[0] + right[0] != parent[0] || left[1] + right[1] != parent[1] {
        return Err(Error::InvalidArgument(format!(
            "children {left:?} + {right:?} do not partition {parent:?}"
        )));
    }
    Ok(gain_unchecked(parent, left, right))
}

#[inline]
pub(crate) fn gain_unchecked(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> f64 {
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    gini_impurity(parent) - nl / n * gini_impurity(left) - nr / n * gini_impurity(right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_split_of_balanced_node() {
        assert_eq!(gini_gain([10, 10], [10, 0], [0, 10]).unwrap(), 0.5);
    }

    #[test]
    fn pure_parent_has_no_gain() {
        assert_eq!(gini_gain([20, 0], [7, 0], [13, 0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated() {
        // g(6,2) = 0.375; g(4,0) = 0; g(2,2) = 0.5.
        let g = gini_gain([6, 2], [4, 0], [2, 2]).unwrap();
        assert!((g - 0.125).abs() < 1e-15);
    }

    #[test]
    fn empty_parent_is_an_error() {
        assert!(gini_gain([0, 0], [0, 0], [0, 0]).is_err());
        assert!(gini_gain([3, 3], [1, 1], [1, 1]).is_err());
    }

    proptest! {
        #[test]
        fn noop_split_has_zero_gain(a in 0usize..500, b in 0usize..500) {
            prop_assume!(a + b > 0);
            prop_assert_eq!(gini_gain([a, b], [a, b], [0, 0]).unwrap(), 0.0);
        }

        #[test]
        fn gain_is_bounded(l0 in 0usize..100, l1 in 0usize..100, r0 in 0usize..100, r1 in 0usize..100) {
            prop_assume!(l0 + l1 + r0 + r1 > 0);
            let g = gini_gain([l0 + r0, l1 + r1], [l0, l1], [r0, r1]).unwrap();
            prop_assert!((-1e-12..=0.5 + 1e-12).contains(&g));
        }
    }
}
