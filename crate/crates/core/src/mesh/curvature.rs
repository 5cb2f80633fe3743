//! Principal curvatures from the one-ring curvature tensor (Taubin 1995).
//!
//! For vertex `v` with normal `N`, each one-ring neighbor `u` contributes a
//! unit tangent direction `T` (the projection of `v - u` onto the tangent
//! plane) and a directional curvature `k = 2 N·(v - u) / |v - u|²`, weighted
//! by the area of the faces sharing edge `vu`. The tensor `M = Σ w k T Tᵀ` is
//! assembled in a tangent frame. Rather than the continuum relation
//! `κ1 = 3 m1 - m2`, which assumes edge directions spread uniformly around the
//! vertex, the 2×2 curvature tensor `K` is recovered by inverting the
//! discrete map `K -> Σ w (Tᵀ K T) T Tᵀ`; this is exact whenever the
//! directional curvatures come from a quadratic form and removes the valence
//! bias on irregular tessellations. The continuum relation is the fallback
//! when the edge directions do not span the tangent plane.

use nalgebra::{Matrix3, Vector3};

use super::{TriMesh, VertexNormals};
use crate::exec;

/// Principal curvatures with `kappa1 >= kappa2`. Convex regions with
/// outward normals have positive curvature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvaturePair {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl CurvaturePair {
    pub fn gaussian(&self) -> f64 {
        self.kappa1 * self.kappa2
    }

    pub fn mean(&self) -> f64 {
        (self.kappa1 + self.kappa2) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvatureEstimate {
    pub pair: CurvaturePair,
    /// Fewer than three usable ring neighbors or no normal; `pair` is zero.
    pub deficient: bool,
}

pub fn curvature_tensor(mesh: &TriMesh, normals: &VertexNormals, v: usize) -> CurvatureEstimate {
    let deficient = CurvatureEstimate {
        pair: CurvaturePair::default(),
        deficient: true,
    };
    let Some(&n) = normals.get(v) else {
        return deficient;
    };
    if mesh.ring(v).len() < 3 {
        return deficient;
    }

    let p = mesh.vertex(v);
    // Edge weights: summed area of the faces incident to each ring edge.
    let mut weights: Vec<(usize, f64)> = mesh.ring(v).iter().map(|&u| (u, 0.0)).collect();
    for &f in mesh.vertex_faces(v) {
        let area = mesh.face_area(f);
        for &u in &mesh.faces()[f] {
            if u != v {
                if let Ok(pos) = weights.binary_search_by_key(&u, |&(id, _)| id) {
                    weights[pos].1 += area;
                }
            }
        }
    }

    let (e1, e2) = tangent_basis(&n);
    // Normal equations: `gram · [a, b, c] = rhs` for K = [[a, b], [b, c]].
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut total = 0.0;
    let mut used = 0;
    for &(u, w) in &weights {
        let d = p - mesh.vertex(u);
        let len_sq = d.norm_squared();
        if len_sq == 0.0 || w <= 0.0 {
            continue;
        }
        let t = d - n * n.dot(&d);
        let t_len = t.norm();
        if t_len <= 1e-12 * len_sq.sqrt() {
            continue;
        }
        let t = t / t_len;
        let k = 2.0 * n.dot(&d) / len_sq;
        let (c, s) = (t.dot(&e1), t.dot(&e2));
        let phi = Vector3::new(c * c, 2.0 * c * s, s * s);
        gram += w * phi * phi.transpose();
        rhs += (w * k) * phi;
        total += w;
        used += 1;
    }
    if used < 3 || total <= 0.0 {
        return deficient;
    }
    gram /= total;
    rhs /= total;

    // Tangent-frame entries of Taubin's M are (rhs.x, rhs.y / 2, rhs.z).
    let (a, b, c) = match well_conditioned_solve(&gram, &rhs) {
        Some(x) => (x.x, x.y, x.z),
        None => {
            let (ma, mb, mc) = (rhs.x, 0.5 * rhs.y, rhs.z);
            let (m1, m2) = sym2_eigen(ma, mb, mc);
            let (k1, k2) = (3.0 * m1 - m2, 3.0 * m2 - m1);
            return CurvatureEstimate {
                pair: CurvaturePair {
                    kappa1: k1,
                    kappa2: k2,
                },
                deficient: false,
            };
        }
    };
    let (k1, k2) = sym2_eigen(a, b, c);
    CurvatureEstimate {
        pair: CurvaturePair {
            kappa1: k1,
            kappa2: k2,
        },
        deficient: false,
    }
}

/// Eigenvalues (descending) of `[[a, b], [b, c]]`.
fn sym2_eigen(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mid + rad, mid - rad)
}

fn well_conditioned_solve(gram: &Matrix3<f64>, rhs: &Vector3<f64>) -> Option<Vector3<f64>> {
    let scale = gram.trace();
    if scale <= 0.0 {
        return None;
    }
    // The gram matrix is scale free; reject near-collinear direction sets.
    if gram.determinant() <= 1e-8 * scale * scale * scale {
        return None;
    }
    gram.cholesky().map(|ch| ch.solve(rhs))
}

pub fn curvature_all(mesh: &TriMesh, normals: &VertexNormals) -> Vec<CurvatureEstimate> {
    exec::map_range(mesh.vertex_count(), |v| curvature_tensor(mesh, normals, v))
}

fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::vertex_normals;

    fn interior_vertex_near(mesh: &TriMesh, target: [f64; 3]) -> usize {
        let t = nalgebra::Point3::from(target);
        (0..mesh.vertex_count())
            .min_by(|&a, &b| {
                (mesh.vertex(a) - t)
                    .norm()
                    .total_cmp(&(mesh.vertex(b) - t).norm())
            })
            .unwrap()
    }

    #[test]
    fn plane_is_flat() {
        let mesh = fixtures::plane_grid(20, 1.0);
        let n = vertex_normals(&mesh);
        let v = interior_vertex_near(&mesh, [0.0, 0.0, 0.0]);
        let c = curvature_tensor(&mesh, &n, v);
        assert!(!c.deficient);
        assert!(c.pair.kappa1.abs() < 1e-6 && c.pair.kappa2.abs() < 1e-6);
    }

    #[test]
    fn unit_sphere() {
        let mesh = fixtures::icosphere(4, 1.0);
        assert!(mesh.vertex_count() >= 2562);
        let n = vertex_normals(&mesh);
        for v in (0..mesh.vertex_count()).step_by(97) {
            let c = curvature_tensor(&mesh, &n, v).pair;
            assert!((c.kappa1 - 1.0).abs() < 0.05, "v{v}: {c:?}");
            assert!((c.kappa2 - 1.0).abs() < 0.05, "v{v}: {c:?}");
        }
    }

    #[test]
    fn cylinder() {
        let r = 2.0;
        let mesh = fixtures::cylinder(r, 6.0, 96, 60);
        let n = vertex_normals(&mesh);
        let v = interior_vertex_near(&mesh, [r, 0.0, 0.0]);
        let c = curvature_tensor(&mesh, &n, v).pair;
        assert!((c.kappa1 - 1.0 / r).abs() < 0.1 / r, "{c:?}");
        assert!(c.kappa2.abs() < 0.1 / r, "{c:?}");
    }

    #[test]
    fn saddle_has_negative_gaussian_curvature() {
        let mesh = fixtures::saddle(40, 0.5);
        let n = vertex_normals(&mesh);
        let v = interior_vertex_near(&mesh, [0.0, 0.0, 0.0]);
        let c = curvature_tensor(&mesh, &n, v).pair;
        assert!(c.gaussian() < 0.0, "{c:?}");
        assert!(c.kappa1 > 0.0 && c.kappa2 < 0.0);
    }

    #[test]
    fn curvature_scales_inversely() {
        let mesh = fixtures::icosphere(3, 1.0);
        let big = mesh.scaled(7.0);
        let (n1, n2) = (vertex_normals(&mesh), vertex_normals(&big));
        for v in [0, 11, 300] {
            let a = curvature_tensor(&mesh, &n1, v).pair;
            let b = curvature_tensor(&big, &n2, v).pair;
            assert!((a.kappa1 / 7.0 - b.kappa1).abs() <= 1e-6 * b.kappa1.abs());
            assert!((a.kappa2 / 7.0 - b.kappa2).abs() <= 1e-6 * b.kappa2.abs());
        }
    }

    #[test]
    fn isolated_or_thin_ring_is_deficient() {
        let mesh = fixtures::plane_grid(2, 1.0);
        let n = vertex_normals(&mesh);
        // Corner vertex 0 of a 2x2 grid has two or three ring neighbors at most.
        let c = curvature_tensor(&mesh, &n, 0);
        if mesh.ring(0).len() < 3 {
            assert!(c.deficient);
            assert_eq!(c.pair, CurvaturePair::default());
        }
    }
}
