use crate::mesh::{Neighbor, SpatialIndex};

/// Scale multiples of δ at which neighborhood averages are taken.
pub const SCALES: [f64; 4] = [1.0, 2.0, 4.0, 6.0];

/// Scale pairs (as indices into [`SCALES`]) for the three DoG blocks.
pub const SCALE_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 3)];

/// Number of fields differenced per scale pair: ten basic attributes plus
/// mean curvature.
pub const FIELDS: usize = 11;

/// Gaussian-weighted mean of `field` over the Euclidean ball `N(v, ρ)`,
/// center included, with weights `exp(-|x - v|² / (2ρ²))`.
pub fn gaussian_weighted_average(index: &SpatialIndex, v: usize, rho: f64, field: &[f64]) -> f64 {
    let nbrs = index.within_radius(&index.point(v), rho);
    weighted_average(&nbrs, rho, |i| field[i])
}

/// Weighted mean over the members of `neighbors` within `rho`. `neighbors`
/// must be ascending by distance, which makes the members a prefix.
pub(crate) fn weighted_average(
    neighbors: &[Neighbor],
    rho: f64,
    value: impl Fn(usize) -> f64,
) -> f64 {
    let r_sq = rho * rho;
    let denom_scale = 2.0 * r_sq;
    let (mut num, mut den) = (0.0, 0.0);
    for nb in neighbors.iter().take_while(|nb| nb.dist_sq <= r_sq) {
        let w = (-nb.dist_sq / denom_scale).exp();
        num += w * value(nb.index);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// The 33 DoG attributes of one vertex. `fields[j]` holds per-vertex values
/// of field `j` (F1..F10 then mean curvature); `neighbors` is the ball of
/// radius `6δ` around the vertex, ascending by distance and containing the
/// vertex itself.
pub fn dog_row(neighbors: &[Neighbor], delta: f64, fields: &[Vec<f64>; FIELDS]) -> [f64; 33] {
    let mut avg = [[0.0; FIELDS]; SCALES.len()];
    for (s, mult) in SCALES.iter().enumerate() {
        let rho = mult * delta;
        for (j, field) in fields.iter().enumerate() {
            avg[s][j] = weighted_average(neighbors, rho, |i| field[i]);
        }
    }
    let mut out = [0.0; 33];
    for (block, &(lo, hi)) in SCALE_PAIRS.iter().enumerate() {
        for j in 0..FIELDS {
            out[block * FIELDS + j] = (avg[hi][j] - avg[lo][j]).abs();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::Point3;

    fn grid_index(n: usize) -> (SpatialIndex, Vec<Point3<f64>>) {
        let mesh = fixtures::plane_grid(n, n as f64);
        let pts = mesh.vertices().to_vec();
        (SpatialIndex::new(&pts), pts)
    }

    fn center_vertex(pts: &[Point3<f64>]) -> usize {
        (0..pts.len())
            .min_by(|&a, &b| pts[a].coords.norm().total_cmp(&pts[b].coords.norm()))
            .unwrap()
    }

    #[test]
    fn constant_field() {
        let (idx, pts) = grid_index(10);
        let field = vec![3.25; pts.len()];
        for rho in [0.5, 1.5, 4.0] {
            let g = gaussian_weighted_average(&idx, center_vertex(&pts), rho, &field);
            assert!((g - 3.25).abs() < 1e-14);
        }
    }

    #[test]
    fn lone_center() {
        let (idx, pts) = grid_index(4);
        let field: Vec<f64> = (0..pts.len()).map(|i| i as f64).collect();
        let v = center_vertex(&pts);
        assert_eq!(gaussian_weighted_average(&idx, v, 0.5, &field), field[v]);
    }

    #[test]
    fn linear_field_on_symmetric_grid() {
        let (idx, pts) = grid_index(12);
        let field: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let v = center_vertex(&pts);
        let g = gaussian_weighted_average(&idx, v, 3.0, &field);
        assert!((g - pts[v].x).abs() < 1e-12);
    }

    #[test]
    fn bounded_by_field_range() {
        let (idx, pts) = grid_index(10);
        let field: Vec<f64> = pts.iter().map(|p| (p.x * 1.7).sin() + p.y).collect();
        for v in [0, 17, 60] {
            let ball = idx.within_radius(&pts[v], 2.5);
            let lo = ball
                .iter()
                .map(|n| field[n.index])
                .fold(f64::INFINITY, f64::min);
            let hi = ball
                .iter()
                .map(|n| field[n.index])
                .fold(f64::NEG_INFINITY, f64::max);
            let g = gaussian_weighted_average(&idx, v, 2.5, &field);
            assert!(g >= lo - 1e-12 && g <= hi + 1e-12);
        }
    }

    #[test]
    fn step_field_dog_matches_direct_recomputation() {
        let (idx, pts) = grid_index(30);
        let step: Vec<f64> = pts
            .iter()
            .map(|p| if p.x < 0.25 { 0.0 } else { 1.0 })
            .collect();
        let mut fields: [Vec<f64>; FIELDS] = Default::default();
        for f in fields.iter_mut() {
            *f = vec![0.0; pts.len()];
        }
        fields[0] = step.clone();
        let delta = 1.0;

        // Independent oracle: brute-force scan over all points per scale.
        let direct = |v: usize, rho: f64| {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, p) in pts.iter().enumerate() {
                let d2 = (p - pts[v]).norm_squared();
                if d2 <= rho * rho {
                    let w = (-d2 / (2.0 * rho * rho)).exp();
                    num += w * step[i];
                    den += w;
                }
            }
            num / den
        };

        let row_at = |x: f64| {
            let v = (0..pts.len())
                .min_by(|&a, &b| {
                    ((pts[a].x - x).abs() + pts[a].y.abs())
                        .total_cmp(&((pts[b].x - x).abs() + pts[b].y.abs()))
                })
                .unwrap();
            let ball = idx.within_radius(&pts[v], 6.0 * delta);
            (v, dog_row(&ball, delta, &fields))
        };

        let mut prev = f64::INFINITY;
        for x in [0.0, 1.0, 2.0, 3.0, 5.0, 8.0] {
            let (v, row) = row_at(x);
            let want = (direct(v, 2.0) - direct(v, 1.0)).abs();
            assert!((row[0] - want).abs() < 1e-12);
            assert!(row.iter().all(|&d| d >= 0.0));
            assert!(
                row[0] <= prev + 1e-12,
                "DoG should decay away from the step"
            );
            prev = row[0];
        }
        let (_, at_step) = row_at(0.0);
        assert!(at_step[0] > 0.0);
    }
}
