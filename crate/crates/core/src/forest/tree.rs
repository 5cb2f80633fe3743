use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gini::{gain_unchecked, ClassCounts};
use super::TrainingSet;

/// Gains within this margin are treated as equal; a split must beat zero by
/// more than this to be taken.
pub const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: ClassCounts,
    },
}

/// Unpruned binary classification tree. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
                Node::Leaf { .. } => return at,
            }
        }
    }

    pub fn leaf_counts(&self, row: &[f64]) -> ClassCounts {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { counts } => counts,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Interest-class proportion of the leaf reached by `row`.
    pub fn proba(&self, row: &[f64]) -> f64 {
        let c = self.leaf_counts(row);
        c[1] as f64 / (c[0] + c[1]) as f64
    }

    /// Leaf majority; an even leaf votes non-interest.
    pub fn label(&self, row: &[f64]) -> bool {
        let c = self.leaf_counts(row);
        c[1] > c[0]
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Split { left, right, .. } => 1 + rec(t, left).max(rec(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        rec(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Record of one node's growth: the rows that reached it and the attributes
/// sampled there (empty when the node was pure or a single row).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node: usize,
    pub rows: Vec<usize>,
    pub features: Vec<usize>,
}

/// Best `(gain, feature, threshold)` over the given attributes, scanning
/// attributes in ascending order and midpoint thresholds ascending. A later
/// candidate wins only if it beats the incumbent by more than
/// [`GAIN_EPSILON`].
pub fn best_split(
    data: &TrainingSet,
    rows: &[usize],
    features: &[usize],
) -> Option<(f64, usize, f64)> {
    let parent = count(data, rows);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut values: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    for &f in features {
        values.clear();
        values.extend(rows.iter().map(|&r| (data.row(r)[f], data.label(r))));
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for i in 0..values.len().saturating_sub(1) {
            left[usize::from(values[i].1)] += 1;
            let (lo, hi) = (values[i].0, values[i + 1].0);
            if lo == hi {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let gain = gain_unchecked(parent, left, right);
            let incumbent = best.map_or(GAIN_EPSILON, |b| b.0 + GAIN_EPSILON);
            if gain > incumbent {
                best = Some((gain, f, midpoint(lo, hi)));
            }
        }
    }
    best
}

/// Midpoint of two distinct values that still separates them.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi && mid >= lo {
        mid
    } else {
        lo
    }
}

fn count(data: &TrainingSet, rows: &[usize]) -> ClassCounts {
    let mut c = [0usize; 2];
    for &r in rows {
        c[usize::from(data.label(r))] += 1;
    }
    c
}

/// Grows an unpruned tree on `rows` (indices into `data`, repeats allowed),
/// drawing `m` attributes without replacement at every splittable node.
pub fn grow_tree<R: Rng + ?Sized>(
    data: &TrainingSet,
    rows: &[usize],
    m: usize,
    rng: &mut R,
) -> DecisionTree {
    grow(data, rows, m, rng, None)
}

/// [`grow_tree`] that also returns a trace per node, in node order.
pub fn grow_tree_traced<R: Rng + ?Sized>(
    data: &TrainingSet,
    rows: &[usize],
    m: usize,
    rng: &mut R,
) -> (DecisionTree, Vec<NodeTrace>) {
    let mut trace = Vec::new();
    let tree = grow(data, rows, m, rng, Some(&mut trace));
    trace.sort_by_key(|t| t.node);
    (tree, trace)
}

fn grow<R: Rng + ?Sized>(
    data: &TrainingSet,
    rows: &[usize],
    m: usize,
    rng: &mut R,
    mut trace: Option<&mut Vec<NodeTrace>>,
) -> DecisionTree {
    let p = data.width();
    let m = m.clamp(1, p.max(1));
    let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
    // Depth-first with the left child first, so the RNG stream is consumed in
    // a fixed order.
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, rows.to_vec())];
    while let Some((id, node_rows)) = stack.pop() {
        let counts = count(data, &node_rows);
        let splittable = node_rows.len() > 1 && counts[0] > 0 && counts[1] > 0;
        let mut features = Vec::new();
        let mut split = None;
        if splittable {
            features = index::sample(rng, p, m).into_vec();
            features.sort_unstable();
            split = best_split(data, &node_rows, &features);
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(NodeTrace {
                node: id,
                rows: node_rows.clone(),
                features: features.clone(),
            });
        }
        match split {
            Some((_, feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = node_rows
                    .iter()
                    .partition(|&&i| data.row(i)[feature] <= threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { counts: [0, 0] });
                nodes.push(Node::Leaf { counts: [0, 0] });
                nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                stack.push((right, r));
                stack.push((left, l));
            }
            None => nodes[id] = Node::Leaf { counts },
        }
    }
    DecisionTree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::RowId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(rows: &[(Vec<f64>, bool)]) -> TrainingSet {
        let mut d = TrainingSet::new(rows[0].0.len());
        for (i, (x, y)) in rows.iter().enumerate() {
            d.push(
                x,
                *y,
                RowId {
                    model: 0,
                    vertex: i as u32,
                },
            )
            .unwrap();
        }
        d
    }

    #[test]
    fn single_class_is_a_leaf() {
        let d = set(&[(vec![1.0], true), (vec![2.0], true), (vec![3.0], true)]);
        let t = grow_tree(&d, &[0, 1, 2], 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: [0, 3] }]);
        assert_eq!(t.proba(&[0.0]), 1.0);
    }

    #[test]
    fn threshold_separable_needs_one_split() {
        let rows: Vec<_> = (-10..10).map(|i| (vec![i as f64 + 0.5], i >= 0)).collect();
        let d = set(&rows);
        let idx: Vec<usize> = (0..d.len()).collect();
        let t = grow_tree(&d, &idx, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.depth(), 1);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 0.0),
            _ => panic!("expected a split"),
        }
        for &i in &idx {
            assert_eq!(t.label(d.row(i)), d.label(i));
        }
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(m >= lo && m < hi);
        assert_eq!(midpoint(0.0, 2.0), 1.0);
    }

    #[test]
    fn identical_features_cannot_split() {
        let d = set(&[(vec![1.0], true), (vec![1.0], false)]);
        let t = grow_tree(&d, &[0, 1], 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: [1, 1] }]);
        assert_eq!(t.proba(&[1.0]), 0.5);
        assert!(!t.label(&[1.0]));
    }

    #[test]
    fn every_row_lands_in_a_leaf_counting_it() {
        let rows: Vec<_> = (0..60)
            .map(|i| {
                let x = (i as f64 * 0.37).sin();
                let y = (i as f64 * 0.91).cos();
                (vec![x, y, x * y], (x + y) > 0.2)
            })
            .collect();
        let d = set(&rows);
        let idx: Vec<usize> = (0..d.len()).collect();
        let (t, trace) = grow_tree_traced(&d, &idx, 2, &mut ChaCha8Rng::seed_from_u64(4));
        for &i in &idx {
            let leaf = t.leaf_index(d.row(i));
            let tr = trace.iter().find(|n| n.node == leaf).unwrap();
            assert!(tr.rows.contains(&i));
            let c = t.leaf_counts(d.row(i));
            assert!(c[usize::from(d.label(i))] > 0);
        }
        assert_eq!(trace.len(), t.nodes.len());
    }
}
