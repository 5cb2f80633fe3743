use nalgebra::Vector3;

use super::TriMesh;
use crate::exec;

/// Per-vertex unit normals. Vertices without a usable incident face get a
/// zero normal and `valid[v] == false`.
#[derive(Debug, Clone)]
pub struct VertexNormals {
    pub normals: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl VertexNormals {
    pub fn get(&self, v: usize) -> Option<&Vector3<f64>> {
        self.valid[v].then(|| &self.normals[v])
    }
}

/// Area-weighted average of incident face normals.
pub fn vertex_normals(mesh: &TriMesh) -> VertexNormals {
    let verts = mesh.vertices();
    let faces = mesh.faces();
    let per_vertex = exec::map_range(mesh.vertex_count(), |v| {
        // The unnormalized cross product has length twice the face area.
        let sum = mesh
            .vertex_faces(v)
            .iter()
            .map(|&f| {
                let [a, b, c] = faces[f];
                (verts[b] - verts[a]).cross(&(verts[c] - verts[a]))
            })
            .fold(Vector3::zeros(), |acc, n| acc + n);
        let len = sum.norm();
        if len > 0.0 && len.is_finite() {
            (sum / len, true)
        } else {
            (Vector3::zeros(), false)
        }
    });
    let (normals, valid) = per_vertex.into_iter().unzip();
    VertexNormals { normals, valid }
}
