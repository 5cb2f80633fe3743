//! Triangle mesh substrate: representation, OFF I/O, normals, curvature,
//! spatial queries and edge-graph geodesics.

mod curvature;
mod diameter;
mod geodesic;
mod normals;
mod off;
mod spatial;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use curvature::{curvature_all, curvature_tensor, CurvatureEstimate, CurvaturePair};
pub use diameter::{compute_diameter, diameter_of_points};
pub use geodesic::{geodesic_distances, geodesic_distances_bounded};
pub use normals::{vertex_normals, VertexNormals};
pub use off::{parse_off, read_off, write_off};
pub use spatial::{KnnResult, Neighbor, SpatialIndex};

/// Indexed triangle mesh with one-ring adjacency.
///
/// Vertex order is preserved from the input; ground truth and detections refer
/// to vertices by index.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    ring: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
    diameter: f64,
}

impl TriMesh {
    /// Builds a mesh, validating face indices and computing adjacency and
    /// diameter. Meshes with fewer than two distinct vertices get diameter 0.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: idx,
                        count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateMesh(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
        }
        if let Some(v) = vertices
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::DegenerateMesh(format!("vertex {v} is not finite")));
        }

        let mut ring = vec![Vec::new(); n];
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                ring[a].push(b);
                ring[b].push(a);
                vertex_faces[a].push(fi);
            }
        }
        for r in &mut ring {
            r.sort_unstable();
            r.dedup();
        }

        let diameter = diameter_of_points(&vertices).unwrap_or(0.0);
        Ok(TriMesh {
            vertices,
            faces,
            ring,
            vertex_faces,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex(&self, v: usize) -> Point3<f64> {
        self.vertices[v]
    }

    /// Sorted one-ring vertex neighbors of `v`.
    pub fn ring(&self, v: usize) -> &[usize] {
        &self.ring[v]
    }

    /// Faces incident to `v`.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Maximum pairwise vertex distance, in model units.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let pa = self.vertices[a];
        (self.vertices[b] - pa)
            .cross(&(self.vertices[c] - pa))
            .norm()
            * 0.5
    }

    /// Copy with every coordinate divided by the diameter.
    pub fn normalized(&self) -> Result<TriMesh> {
        if self.diameter <= 0.0 {
            return Err(Error::DegenerateMesh(
                "cannot normalize a mesh with zero diameter".into(),
            ));
        }
        Ok(self.scaled(1.0 / self.diameter))
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        self.map_vertices(|p| Point3::from(p.coords * s))
    }

    /// Applies `x -> R x + t`.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> TriMesh {
        self.map_vertices(|p| Point3::from(rotation * p.coords + translation))
    }

    fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriMesh {
        let vertices: Vec<_> = self.vertices.iter().map(f).collect();
        let diameter = diameter_of_points(&vertices).unwrap_or(0.0);
        TriMesh {
            vertices,
            faces: self.faces.clone(),
            ring: self.ring.clone(),
            vertex_faces: self.vertex_faces.clone(),
            diameter,
        }
    }

    /// Connected components of the edge graph, as a component id per vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in &self.ring[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn stats(&self) -> MeshStats {
        let mut edge_faces = std::collections::BTreeMap::<(usize, usize), usize>::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edge_faces.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary_edges = edge_faces.values().filter(|&&c| c == 1).count();
        let non_manifold_edges = edge_faces.values().filter(|&&c| c > 2).count();
        let isolated_vertices = self.vertex_faces.iter().filter(|f| f.is_empty()).count();
        let (components, _) = self.components();
        MeshStats {
            vertices: self.vertex_count(),
            faces: self.face_count(),
            edges: edge_faces.len(),
            diameter: self.diameter,
            components,
            boundary_edges,
            non_manifold_edges,
            isolated_vertices,
        }
    }
}

/// Summary record for a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
    pub edges: usize,
    pub diameter: f64,
    pub components: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub isolated_vertices: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn ring_is_symmetric() {
        let mesh = fixtures::icosphere(2, 1.0);
        for v in 0..mesh.vertex_count() {
            for &u in mesh.ring(v) {
                assert!(mesh.ring(u).contains(&v));
            }
        }
    }

    #[test]
    fn rejects_degenerate_face() {
        let verts = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            TriMesh::new(verts, vec![[0, 1, 1]]),
            Err(Error::DegenerateMesh(_))
        ));
    }

    #[test]
    fn stats_of_closed_sphere() {
        let s = fixtures::icosphere(1, 1.0).stats();
        assert_eq!(s.vertices, 42);
        assert_eq!(s.faces, 80);
        assert_eq!(s.edges, 120);
        assert_eq!(s.components, 1);
        assert_eq!(s.boundary_edges, 0);
    }

    #[test]
    fn normalized_has_unit_diameter() {
        let m = fixtures::icosphere(2, 3.5).normalized().unwrap();
        assert!((m.diameter() - 1.0).abs() < 1e-12);
    }
}
