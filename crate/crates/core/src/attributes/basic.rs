use std::f64::consts::PI;

use crate::mesh::{CurvatureEstimate, Neighbor, VertexNormals};

/// F6 and F7 for one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityAgreement {
    /// Neighbor count over the volume of the ball of radius `tau`.
    pub density: f64,
    /// Mean of `n(v)·n(x)` over neighbors with a valid normal.
    pub normal_agreement: f64,
    pub zero_radius: bool,
    pub zero_normal: bool,
}

pub fn density_and_normal_agreement(
    v: usize,
    neighbors: &[Neighbor],
    tau: f64,
    normals: &VertexNormals,
) -> DensityAgreement {
    let zero_radius = tau <= 0.0;
    let density = if zero_radius {
        0.0
    } else {
        neighbors.len() as f64 / (4.0 / 3.0 * PI * tau * tau * tau)
    };

    let (normal_agreement, zero_normal) = match normals.get(v) {
        None => (0.0, true),
        Some(nv) => {
            let (sum, count) = neighbors
                .iter()
                .filter_map(|nb| normals.get(nb.index))
                .fold((0.0, 0usize), |(s, c), nx| (s + nv.dot(nx), c + 1));
            if count == 0 {
                (0.0, false)
            } else {
                (sum / count as f64, false)
            }
        }
    };

    DensityAgreement {
        density,
        normal_agreement,
        zero_radius,
        zero_normal,
    }
}

/// F8, F9, F10: principal curvatures and their product.
pub fn curvature_features(c: &CurvatureEstimate) -> [f64; 3] {
    if c.deficient {
        return [0.0; 3];
    }
    let (k1, k2) = (c.pair.kappa1, c.pair.kappa2);
    [k1, k2, k1 * k2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CurvaturePair;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nbrs(n: usize) -> Vec<Neighbor> {
        (1..=n)
            .map(|i| Neighbor {
                index: i,
                dist_sq: 0.5,
            })
            .collect()
    }

    #[test]
    fn density_in_unit_ball() {
        let normals = VertexNormals {
            normals: vec![Vector3::z(); 101],
            valid: vec![true; 101],
        };
        let d = density_and_normal_agreement(0, &nbrs(100), 1.0, &normals);
        assert!((d.density - 100.0 / (4.0 / 3.0 * PI)).abs() < 1e-12);
        assert!((d.density - 23.873).abs() < 1e-3);
        assert_eq!(d.normal_agreement, 1.0);
    }

    #[test]
    fn zero_radius_flagged() {
        let normals = VertexNormals {
            normals: vec![Vector3::z(); 3],
            valid: vec![true; 3],
        };
        let d = density_and_normal_agreement(0, &nbrs(2), 0.0, &normals);
        assert!(d.zero_radius);
        assert_eq!(d.density, 0.0);
    }

    #[test]
    fn invalid_normals_are_excluded() {
        let normals = VertexNormals {
            normals: vec![Vector3::z(), Vector3::z(), Vector3::zeros(), -Vector3::z()],
            valid: vec![true, true, false, true],
        };
        let d = density_and_normal_agreement(0, &nbrs(3), 1.0, &normals);
        // (1 + (-1)) / 2, the invalid neighbor does not count.
        assert_eq!(d.normal_agreement, 0.0);
        let center_invalid = density_and_normal_agreement(2, &nbrs(3), 1.0, &normals);
        assert!(center_invalid.zero_normal);
    }

    #[test]
    fn random_normals_average_to_zero() {
        // Mean of n·x for x uniform on the sphere has variance 1/(3·100).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 1000;
        let mut means = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut normals = vec![Vector3::z()];
            while normals.len() < 101 {
                let g = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let l = g.norm();
                if l > 1e-6 && l <= 1.0 {
                    normals.push(g / l);
                }
            }
            let vn = VertexNormals {
                valid: vec![true; 101],
                normals,
            };
            means.push(density_and_normal_agreement(0, &nbrs(100), 1.0, &vn).normal_agreement);
        }
        let grand = means.iter().sum::<f64>() / trials as f64;
        let sigma = (1.0 / 300.0f64).sqrt() / (trials as f64).sqrt();
        assert!(
            grand.abs() < 3.0 * sigma,
            "mean {grand}, 3σ {}",
            3.0 * sigma
        );
    }

    #[test]
    fn curvature_product_is_exact() {
        let c = CurvatureEstimate {
            pair: CurvaturePair {
                kappa1: 1.3,
                kappa2: -0.7,
            },
            deficient: false,
        };
        let f = curvature_features(&c);
        assert_eq!(f[2], f[0] * f[1]);
        assert!(f[0] >= f[1]);
        let d = CurvatureEstimate {
            deficient: true,
            ..c
        };
        assert_eq!(curvature_features(&d), [0.0; 3]);
    }
}
