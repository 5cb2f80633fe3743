//! Per-vertex geometric attributes.
//!
//! Column layout (fixed, versioned by [`SCHEMA_VERSION`]):
//!
//! | columns | content |
//! |---------|---------|
//! | F1..F5  | scatter-matrix eigenvalue ratios and gaps over the 100-NN |
//! | F6      | neighbor density |
//! | F7      | mean normal agreement with the neighbors |
//! | F8..F10 | principal curvatures and Gaussian curvature |
//! | F11..F21 | DoG between δ and 2δ of F1..F10, then of mean curvature |
//! | F22..F32 | same between 2δ and 4δ |
//! | F33..F43 | same between 4δ and 6δ |
//!
//! All lengths are measured after dividing coordinates by the mesh
//! diameter, which makes every column invariant to rigid motion and uniform
//! scaling.

mod basic;
mod dog;
mod io;
mod scatter;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::mesh::{curvature_all, vertex_normals, SpatialIndex, TriMesh};
use crate::{Error, Result};

pub use basic::{curvature_features, density_and_normal_agreement, DensityAgreement};
pub use dog::{dog_row, gaussian_weighted_average, FIELDS, SCALES, SCALE_PAIRS};
pub use io::{parse_attribute_csv, read_attribute_csv, write_attribute_csv};
pub use scatter::{scatter_matrix, ScatterSpectrum};

pub const NUM_ATTRIBUTES: usize = 43;
pub const NUM_BASIC: usize = 10;
pub const SCHEMA_VERSION: u32 = 1;

pub type AttributeRow = [f64; NUM_ATTRIBUTES];

bitflags! {
    /// Provenance flags for degenerate attribute computations.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct VertexFlags: u8 {
        /// Fewer than the requested number of neighbors exist.
        const SHORT_NEIGHBORHOOD = 1;
        /// Curvature could not be estimated from the one-ring.
        const DEFICIENT_RING = 1 << 1;
        /// The vertex has no usable normal.
        const ZERO_NORMAL = 1 << 2;
        /// All neighbors coincide with the vertex.
        const DEGENERATE_SCATTER = 1 << 3;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeParams {
    /// Size of the Euclidean neighborhood used by F1..F7.
    pub neighbors: usize,
    /// Base DoG scale as a fraction of the diameter.
    pub delta_fraction: f64,
}

impl Default for AttributeParams {
    fn default() -> Self {
        AttributeParams {
            neighbors: 100,
            delta_fraction: 0.003,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    pub model_id: String,
    /// Diameter of the source mesh in model units.
    pub diameter: f64,
    /// Base DoG scale as a fraction of the diameter.
    pub delta_fraction: f64,
    /// Neighborhood size used for the scatter, density and normal attributes.
    pub neighbors: usize,
    pub rows: Vec<AttributeRow>,
    pub flags: Vec<VertexFlags>,
}

impl AttributeMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// δ in model units.
    pub fn delta(&self) -> f64 {
        self.delta_fraction * self.diameter
    }
}

/// Basic attributes of every vertex of an already normalized mesh, together
/// with the mean curvature field and flags.
struct BasicColumns {
    rows: Vec<[f64; NUM_BASIC]>,
    mean_curvature: Vec<f64>,
    flags: Vec<VertexFlags>,
}

fn basic_columns(mesh: &TriMesh, index: &SpatialIndex, params: &AttributeParams) -> BasicColumns {
    let normals = vertex_normals(mesh);
    let curvature = curvature_all(mesh, &normals);
    let per_vertex = exec::map_range(mesh.vertex_count(), |v| {
        let mut flags = VertexFlags::empty();
        let knn = index.knn(v, params.neighbors);
        if knn.short {
            flags |= VertexFlags::SHORT_NEIGHBORHOOD;
        }
        let (s, tau) = scatter_matrix(mesh.vertices(), v, &knn.neighbors);
        if tau <= 0.0 {
            flags |= VertexFlags::DEGENERATE_SCATTER;
        }
        let eig = ScatterSpectrum::from_matrix(&s).eigen_features();
        let da = density_and_normal_agreement(v, &knn.neighbors, tau, &normals);
        if da.zero_normal {
            flags |= VertexFlags::ZERO_NORMAL;
        }
        let c = curvature[v];
        if c.deficient {
            flags |= VertexFlags::DEFICIENT_RING;
        }
        let curv = curvature_features(&c);
        let mean = if c.deficient { 0.0 } else { c.pair.mean() };
        let row = [
            eig[0],
            eig[1],
            eig[2],
            eig[3],
            eig[4],
            da.density,
            da.normal_agreement,
            curv[0],
            curv[1],
            curv[2],
        ];
        (row, mean, flags)
    });
    let mut out = BasicColumns {
        rows: Vec::with_capacity(per_vertex.len()),
        mean_curvature: Vec::with_capacity(per_vertex.len()),
        flags: Vec::with_capacity(per_vertex.len()),
    };
    for (row, mean, flags) in per_vertex {
        out.rows.push(row);
        out.mean_curvature.push(mean);
        out.flags.push(flags);
    }
    out
}

/// Computes all 43 attributes for every vertex.
pub fn extract_all(
    mesh: &TriMesh,
    model_id: &str,
    params: &AttributeParams,
) -> Result<AttributeMatrix> {
    if params.neighbors == 0 {
        return Err(Error::InvalidArgument(
            "neighbor count must be at least 1".into(),
        ));
    }
    if !(params.delta_fraction > 0.0) {
        return Err(Error::InvalidArgument(
            "delta fraction must be positive".into(),
        ));
    }
    let normalized = mesh.normalized()?;
    let index = SpatialIndex::new(normalized.vertices());
    let basic = basic_columns(&normalized, &index, params);

    let mut fields: [Vec<f64>; FIELDS] = Default::default();
    for (j, field) in fields.iter_mut().enumerate().take(NUM_BASIC) {
        *field = basic.rows.iter().map(|r| r[j]).collect();
    }
    fields[NUM_BASIC] = basic.mean_curvature.clone();

    let delta = params.delta_fraction;
    let max_scale = SCALES[SCALES.len() - 1] * delta;
    let dogs = exec::map_range(normalized.vertex_count(), |v| {
        let ball = index.within_radius(&normalized.vertex(v), max_scale);
        dog_row(&ball, delta, &fields)
    });

    let rows = basic
        .rows
        .iter()
        .zip(&dogs)
        .map(|(b, d)| {
            let mut row = [0.0; NUM_ATTRIBUTES];
            row[..NUM_BASIC].copy_from_slice(b);
            row[NUM_BASIC..].copy_from_slice(d);
            row
        })
        .collect::<Vec<AttributeRow>>();

    if let Some(v) = rows.iter().position(|r| r.iter().any(|x| !x.is_finite())) {
        return Err(Error::Invariant(format!(
            "non-finite attribute at vertex {v}"
        )));
    }

    Ok(AttributeMatrix {
        model_id: model_id.to_string(),
        diameter: mesh.diameter(),
        delta_fraction: delta,
        neighbors: params.neighbors,
        rows,
        flags: basic.flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::{Rotation3, Unit, Vector3};

    #[test]
    fn icosphere_rows_are_homogeneous() {
        let mesh = fixtures::icosphere(4, 1.0);
        let m = extract_all(&mesh, "sphere", &AttributeParams::default()).unwrap();
        assert_eq!(m.len(), mesh.vertex_count());
        // Normal agreement and curvature are nearly uniform on a sphere. The
        // icosphere's triangle sizes vary by about ±20%, so density and the
        // scatter ratios are not.
        for (j, tol) in [(6, 0.01), (7, 0.05), (8, 0.05), (9, 0.10)] {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            for x in &col {
                assert!(
                    (x - mean).abs() <= tol * mean.abs(),
                    "F{} varies: {x} vs {mean}",
                    j + 1
                );
            }
        }
        // Unit radius is 1/2 in diameter-normalized units.
        let f8 = m.column(7);
        assert!(f8.iter().all(|k| (k - 2.0).abs() < 0.1));
    }

    #[test]
    fn plane_is_flat_and_finite() {
        let mesh = fixtures::plane_grid(30, 1.0);
        let m = extract_all(&mesh, "plane", &AttributeParams::default()).unwrap();
        for r in &m.rows {
            assert!(r.iter().all(|x| x.is_finite()));
            assert!(r[7].abs() < 1e-6 && r[8].abs() < 1e-6);
            assert!(r[NUM_BASIC..].iter().all(|&d| d >= 0.0));
            assert_eq!(r[9], r[7] * r[8]);
        }
    }

    #[test]
    fn rotation_and_scale_invariance() {
        let mesh = fixtures::bumpy_sphere(3, &[0, 200], 0.4, 0.3, 0.01, 4);
        let base = extract_all(&mesh, "m", &AttributeParams::default()).unwrap();
        let rot =
            Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(0.3, -1.0, 0.5)), 1.1);
        let moved = mesh
            .transformed(rot.matrix(), &Vector3::new(4.0, -2.0, 9.0))
            .scaled(10.0);
        let other = extract_all(&moved, "m", &AttributeParams::default()).unwrap();
        for (a, b) in base.rows.iter().zip(&other.rows) {
            for j in 0..NUM_ATTRIBUTES {
                assert!(
                    (a[j] - b[j]).abs() < 1e-6,
                    "F{}: {} vs {}",
                    j + 1,
                    a[j],
                    b[j]
                );
            }
        }
    }

    #[test]
    fn tiny_mesh_is_flagged_short() {
        let mesh = fixtures::icosphere(1, 1.0);
        let m = extract_all(&mesh, "small", &AttributeParams::default()).unwrap();
        assert!(m
            .flags
            .iter()
            .all(|f| f.contains(VertexFlags::SHORT_NEIGHBORHOOD)));
    }

    #[test]
    fn zero_diameter_rejected() {
        let mesh = TriMesh::new(vec![nalgebra::Point3::origin()], vec![]).unwrap();
        assert!(extract_all(&mesh, "x", &AttributeParams::default()).is_err());
    }
}
