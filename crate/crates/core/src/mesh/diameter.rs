use nalgebra::Point3;

use super::TriMesh;
use crate::{exec, Error, Result};

/// Below this vertex count the exhaustive scan is used directly.
const EXHAUSTIVE_LIMIT: usize = 5000;

/// Maximum pairwise Euclidean distance between mesh vertices.
pub fn compute_diameter(mesh: &TriMesh) -> Result<f64> {
    diameter_of_points(mesh.vertices())
}

/// Exact diameter of a point set. Errors when there are fewer than two
/// distinct points.
pub fn diameter_of_points(points: &[Point3<f64>]) -> Result<f64> {
    let d = if points.len() < EXHAUSTIVE_LIMIT {
        exhaustive(points)
    } else {
        branch_and_bound(points)
    };
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::DegenerateMesh(
            "fewer than two distinct vertices".into(),
        ))
    }
}

pub(crate) fn exhaustive(points: &[Point3<f64>]) -> f64 {
    exec::map_range(points.len(), |i| {
        let pi = points[i];
        points[i + 1..]
            .iter()
            .map(|pj| (pj - pi).norm_squared())
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max)
    .sqrt()
}

/// Exact diameter via radial bounds about the centroid: for any pair,
/// `|p - q| <= |p - c| + |q - c|`, so pairs are visited in decreasing radius
/// order and the scan stops once no remaining pair can beat the best.
pub(crate) fn branch_and_bound(points: &[Point3<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let centroid = points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.coords - centroid).norm(), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    // Slack on the bound so rounding in the radii cannot prune a true maximum.
    const SLACK: f64 = 1.0 + 1e-9;
    let mut best_sq = 0.0_f64;
    for (a, &(ri, i)) in order.iter().enumerate() {
        if 2.0 * ri * SLACK < best_sq.sqrt() {
            break;
        }
        let pi = points[i];
        for &(rj, j) in &order[a + 1..] {
            if (ri + rj) * SLACK < best_sq.sqrt() {
                break;
            }
            let d = (points[j] - pi).norm_squared();
            if d > best_sq {
                best_sq = d;
            }
        }
    }
    best_sq.sqrt()
}
