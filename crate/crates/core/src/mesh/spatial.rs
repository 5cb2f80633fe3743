use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Point3;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    pub fn dist(&self) -> f64 {
        self.dist_sq.sqrt()
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Result of a k-nearest-neighbor query.
#[derive(Debug, Clone)]
pub struct KnnResult {
    /// Ascending by (distance, index).
    pub neighbors: Vec<Neighbor>,
    /// Fewer than `k` other points exist.
    pub short: bool,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over a point set with exact kNN and radius queries.
///
/// Distance ties are broken by ascending point index.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(points: &[Point3<f64>]) -> Self {
        let mut index = SpatialIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Point3<f64> {
        self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &self.order[start..end];
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in slice {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `query`, optionally excluding one index.
    pub fn knn_point(&self, query: &Point3<f64>, k: usize, exclude: Option<usize>) -> KnnResult {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.knn_recurse(0, query, k, exclude, &mut heap);
        }
        let neighbors = heap.into_sorted_vec();
        KnnResult {
            neighbors,
            short: available < k,
        }
    }

    /// The `k` nearest vertices to vertex `v`, excluding `v` itself.
    pub fn knn(&self, v: usize, k: usize) -> KnnResult {
        self.knn_point(&self.points[v], k, Some(v))
    }

    fn knn_recurse(
        &self,
        node: usize,
        q: &Point3<f64>,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Neighbor>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Neighbor {
                        index: i,
                        dist_sq: (self.points[i] - q).norm_squared(),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if let Some(worst) = heap.peek() {
                        if cand < *worst {
                            heap.pop();
                            heap.push(cand);
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_recurse(near, q, k, exclude, heap);
                let explore_far =
                    heap.len() < k || heap.peek().is_some_and(|w| diff * diff <= w.dist_sq);
                if explore_far {
                    self.knn_recurse(far, q, k, exclude, heap);
                }
            }
        }
    }

    /// All points with distance ≤ `radius` from `query`, ascending by
    /// (distance, index).
    pub fn within_radius(&self, query: &Point3<f64>, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() && radius >= 0.0 {
            self.radius_recurse(0, query, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_recurse(&self, node: usize, q: &Point3<f64>, r_sq: f64, out: &mut Vec<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = (self.points[i] - q).norm_squared();
                    if d <= r_sq {
                        out.push(Neighbor {
                            index: i,
                            dist_sq: d,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.radius_recurse(near, q, r_sq, out);
                if diff * diff <= r_sq {
                    self.radius_recurse(far, q, r_sq, out);
                }
            }
        }
    }
}
