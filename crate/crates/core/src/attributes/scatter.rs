use nalgebra::{Matrix3, Point3, SymmetricEigen};

use crate::mesh::Neighbor;

/// Eigenvalues of a scatter matrix, ascending and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterSpectrum {
    pub lambda: [f64; 3],
}

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when they appear in a denominator.
const RELATIVE_ZERO: f64 = 1e-12;

impl ScatterSpectrum {
    pub fn from_matrix(s: &Matrix3<f64>) -> Self {
        let eig = SymmetricEigen::new(*s);
        let mut lambda = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        lambda.sort_by(f64::total_cmp);
        // S is a sum of weighted rank-1 projectors; negatives are rounding.
        for l in &mut lambda {
            *l = l.max(0.0);
        }
        ScatterSpectrum { lambda }
    }

    pub fn trace(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// F1..F5: `λ1/λ2, λ1/λ3, λ2/λ3, λ2 - λ1, λ3 - λ2` with ascending
    /// eigenvalues. A vanishing `λ3` gives ratios of 1; a vanishing `λ2` gives
    /// `F1 = 1`.
    pub fn eigen_features(&self) -> [f64; 5] {
        let [l1, l2, l3] = self.lambda;
        let zero = |x: f64| x <= RELATIVE_ZERO * l3 || x == 0.0;
        let (f1, f2, f3) = if l3 <= 0.0 {
            (1.0, 1.0, 1.0)
        } else {
            let f1 = if zero(l2) { 1.0 } else { l1 / l2 };
            (f1, l1 / l3, l2 / l3)
        };
        [f1, f2, f3, l2 - l1, l3 - l2]
    }
}

/// Gaussian-weighted scatter of unit neighbor offsets about `center`:
/// `S = Σ exp(-|x - v|² / (τ²/2)) (x - v)(x - v)ᵀ / |x - v|²`, where `τ` is the
/// distance to the farthest neighbor. Coincident neighbors are skipped.
///
/// Returns the matrix and `τ`; `τ == 0` means every neighbor coincides with
/// the center and the matrix is zero.
pub fn scatter_matrix(
    points: &[Point3<f64>],
    center: usize,
    neighbors: &[Neighbor],
) -> (Matrix3<f64>, f64) {
    let tau_sq = neighbors.iter().map(|n| n.dist_sq).fold(0.0, f64::max);
    let mut s = Matrix3::zeros();
    if tau_sq <= 0.0 {
        return (s, 0.0);
    }
    let v = points[center];
    for nb in neighbors {
        if nb.dist_sq == 0.0 {
            continue;
        }
        let d = points[nb.index] - v;
        let w = (-nb.dist_sq / (tau_sq / 2.0)).exp();
        s += (w / nb.dist_sq) * d * d.transpose();
    }
    (s, tau_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn neighbors_of(points: &[Point3<f64>], center: usize) -> Vec<Neighbor> {
        points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != center)
            .map(|(i, p)| Neighbor {
                index: i,
                dist_sq: (p - points[center]).norm_squared(),
            })
            .collect()
    }

    #[test]
    fn single_neighbor_on_axis() {
        let pts = [Point3::origin(), Point3::new(0.7, 0.0, 0.0)];
        let (s, tau) = scatter_matrix(&pts, 0, &neighbors_of(&pts, 0));
        assert_eq!(tau, 0.7);
        let w = (-2.0f64).exp();
        assert!((s[(0, 0)] - w).abs() < 1e-15);
        assert_eq!(s[(1, 1)], 0.0);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn coincident_neighbors_give_zero() {
        let pts = [Point3::new(1.0, 2.0, 3.0); 3];
        let (s, tau) = scatter_matrix(&pts, 0, &neighbors_of(&pts, 0));
        assert_eq!(tau, 0.0);
        assert_eq!(s, Matrix3::zeros());
    }

    #[test]
    fn xy_swap_symmetry() {
        let pts = [
            Point3::origin(),
            Point3::new(1.0, 0.5, 0.2),
            Point3::new(0.5, 1.0, 0.2),
            Point3::new(-0.3, 0.8, -0.1),
            Point3::new(0.8, -0.3, -0.1),
        ];
        let (s, _) = scatter_matrix(&pts, 0, &neighbors_of(&pts, 0));
        assert!((s[(0, 0)] - s[(1, 1)]).abs() < 1e-15);
        assert!((s[(0, 2)] - s[(1, 2)]).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_summation() {
        // Independent re-summation with compensated (Kahan) accumulation.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..101)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let nbrs = neighbors_of(&pts, 0);
        let (s, tau) = scatter_matrix(&pts, 0, &nbrs);
        for r in 0..3 {
            for c in 0..3 {
                let (mut sum, mut comp) = (0.0f64, 0.0f64);
                for p in &pts[1..] {
                    let d = [p.x - pts[0].x, p.y - pts[0].y, p.z - pts[0].z];
                    let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    let term = (-2.0 * len2 / (tau * tau)).exp() * d[r] * d[c] / len2;
                    let y = term - comp;
                    let t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                }
                assert!((s[(r, c)] - sum).abs() < 1e-12, "({r},{c})");
            }
        }
    }

    #[test]
    fn isotropic_and_planar_spectra() {
        let iso = ScatterSpectrum {
            lambda: [1.0, 1.0, 1.0],
        };
        assert_eq!(iso.eigen_features(), [1.0, 1.0, 1.0, 0.0, 0.0]);
        let planar = ScatterSpectrum {
            lambda: [0.0, 1.0, 1.0],
        };
        assert_eq!(planar.eigen_features(), [0.0, 0.0, 1.0, 1.0, 0.0]);
        let empty = ScatterSpectrum { lambda: [0.0; 3] };
        assert_eq!(empty.eigen_features(), [1.0, 1.0, 1.0, 0.0, 0.0]);
        let line = ScatterSpectrum {
            lambda: [0.0, 0.0, 2.0],
        };
        assert_eq!(line.eigen_features(), [1.0, 0.0, 0.0, 0.0, 2.0]);
    }

    /// Closed-form roots of the characteristic polynomial of a symmetric 3×3
    /// matrix (trigonometric solution of the depressed cubic).
    fn cubic_eigenvalues(a: &Matrix3<f64>) -> [f64; 3] {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let q = a.trace() / 3.0;
        if p1 == 0.0 {
            let mut d = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
            d.sort_by(f64::total_cmp);
            return d;
        }
        let p2 =
            (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (a - Matrix3::identity() * q) / p;
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut e = [e1, e2, e3];
        e.sort_by(f64::total_cmp);
        e
    }

    proptest! {
        #[test]
        fn spectrum_matches_cubic_roots(entries in prop::array::uniform9(-1.0f64..1.0)) {
            let g = Matrix3::from_row_slice(&entries);
            let s = g * g.transpose();
            let spec = ScatterSpectrum::from_matrix(&s);
            let roots = cubic_eigenvalues(&s);
            let scale = s.trace().max(1e-300);
            for (l, r) in spec.lambda.iter().zip(roots) {
                prop_assert!((l - r.max(0.0)).abs() <= 1e-9 * scale);
            }
            prop_assert!((spec.trace() - s.trace()).abs() <= 1e-9 * scale);
            let f = spec.eigen_features();
            prop_assert!(f.iter().all(|x| x.is_finite()));
            prop_assert!((0.0..=1.0).contains(&f[0]) && (0.0..=1.0).contains(&f[1]) && (0.0..=1.0).contains(&f[2]));
            prop_assert!(f[3] >= 0.0 && f[4] >= 0.0);
        }
    }
}
