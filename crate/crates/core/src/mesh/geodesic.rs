use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::TriMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    dist: f64,
    vertex: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source shortest-path distances over the mesh edge graph with
/// Euclidean edge weights. Unreachable vertices are `+inf`.
pub fn geodesic_distances(mesh: &TriMesh, sources: &[usize]) -> Result<Vec<f64>> {
    geodesic_distances_bounded(mesh, sources, f64::INFINITY)
}

/// Like [`geodesic_distances`] but stops expanding past `limit`; vertices
/// farther than `limit` are reported as `+inf`.
pub fn geodesic_distances_bounded(
    mesh: &TriMesh,
    sources: &[usize],
    limit: f64,
) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("empty geodesic source set".into()));
    }
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if s >= n {
            return Err(Error::InvalidArgument(format!(
                "source vertex {s} out of range for {n} vertices"
            )));
        }
        dist[s] = 0.0;
        heap.push(State {
            dist: 0.0,
            vertex: s,
        });
    }
    let verts = mesh.vertices();
    while let Some(State { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &w in mesh.ring(u) {
            let nd = d + (verts[w] - verts[u]).norm();
            if nd < dist[w] && nd <= limit {
                dist[w] = nd;
                heap.push(State {
                    dist: nd,
                    vertex: w,
                });
            }
        }
    }
    Ok(dist)
}
