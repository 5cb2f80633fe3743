//! Synthetic meshes with known geometry, used by tests, benches and the
//! demo pipeline.

use std::collections::HashMap;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::groundtruth::{write_clicks, Click, ClickSet, SubjectClicks};
use crate::mesh::{write_off, TriMesh};
use crate::{Error, Result};

/// Subdivided icosahedron projected to a sphere of the given radius.
/// Subdivision level `s` yields `10·4^s + 2` vertices with outward winding.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let (verts, faces) = icosphere_unit(subdivisions);
    let verts = verts
        .into_iter()
        .map(|p| Point3::from(p.coords * radius))
        .collect();
    TriMesh::new(verts, faces).expect("icosphere is valid")
}

fn icosphere_unit(subdivisions: u32) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Point3::from(nalgebra::Vector3::from(*c).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point3<f64>>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (verts[a].coords + verts[b].coords).normalize();
                verts.push(Point3::from(m));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Flat `n × n` cell grid in the `z = 0` plane, centered at the origin, with
/// normals along `+z`.
pub fn plane_grid(n: usize, size: f64) -> TriMesh {
    height_field(n, size, |_, _| 0.0)
}

/// Grid over `[-e, e]²` lifted to `z = x² - y²`.
pub fn saddle(n: usize, half_extent: f64) -> TriMesh {
    height_field(n, 2.0 * half_extent, |x, y| x * x - y * y)
}

fn height_field(n: usize, size: f64, z: impl Fn(f64, f64) -> f64) -> TriMesh {
    let step = size / n as f64;
    let mut verts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = -size / 2.0 + i as f64 * step;
            let y = -size / 2.0 + j as f64 * step;
            verts.push(Point3::new(x, y, z(x, y)));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(verts, faces).expect("grid is valid")
}

/// Open cylinder of radius `r` along `z` with outward winding.
pub fn cylinder(r: f64, height: f64, around: usize, along: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(around * (along + 1));
    for j in 0..=along {
        let z = -height / 2.0 + height * j as f64 / along as f64;
        for i in 0..around {
            let a = std::f64::consts::TAU * i as f64 / around as f64;
            verts.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let id = |i: usize, j: usize| j * around + (i % around);
    let mut faces = Vec::new();
    for j in 0..along {
        for i in 0..around {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(verts, faces).expect("cylinder is valid")
}

/// Torus with major radius `big_r` and tube radius `small_r`.
pub fn torus(big_r: f64, small_r: f64, around: usize, tube: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(around * tube);
    for i in 0..around {
        let u = std::f64::consts::TAU * i as f64 / around as f64;
        for j in 0..tube {
            let v = std::f64::consts::TAU * j as f64 / tube as f64;
            let rr = big_r + small_r * v.cos();
            verts.push(Point3::new(rr * u.cos(), rr * u.sin(), small_r * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % around) * tube + (j % tube);
    let mut faces = Vec::new();
    for i in 0..around {
        for j in 0..tube {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(verts, faces).expect("torus is valid")
}

/// Unit icosphere with hemispherical protrusions centered on the given
/// vertices (which become the bump apexes) plus optional radial jitter.
///
/// `cap_radius` is the angular radius of each bump footprint (radians on the
/// unit sphere) and `height` the apex elevation; the profile is
/// `height · sqrt(1 - (θ/cap_radius)²)`.
pub fn bumpy_sphere(
    subdivisions: u32,
    apexes: &[usize],
    cap_radius: f64,
    height: f64,
    jitter: f64,
    seed: u64,
) -> TriMesh {
    let (verts, faces) = icosphere_unit(subdivisions);
    let dirs: Vec<_> = apexes.iter().map(|&a| verts[a].coords).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts = verts
        .into_iter()
        .map(|p| {
            let mut r = 1.0;
            for d in &dirs {
                let theta = p.coords.dot(d).clamp(-1.0, 1.0).acos();
                if theta < cap_radius {
                    let s = theta / cap_radius;
                    r += height * (1.0 - s * s).sqrt();
                }
            }
            if jitter > 0.0 {
                r += rng.random_range(-jitter..jitter);
            }
            Point3::from(p.coords * r)
        })
        .collect();
    TriMesh::new(verts, faces).expect("bumpy sphere is valid")
}

/// Picks `count` vertices of an icosphere of the given level whose pairwise
/// angular separation is at least `min_angle`, deterministically from `seed`.
pub fn spread_vertices(subdivisions: u32, count: usize, min_angle: f64, seed: u64) -> Vec<usize> {
    let (verts, _) = icosphere_unit(subdivisions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    let mut attempts = 0;
    while chosen.len() < count && attempts < 100_000 {
        attempts += 1;
        let c = rng.random_range(0..verts.len());
        let ok = chosen.iter().all(|&o| {
            verts[o]
                .coords
                .dot(&verts[c].coords)
                .clamp(-1.0, 1.0)
                .acos()
                >= min_angle
        });
        if ok {
            chosen.push(c);
        }
    }
    chosen
}

/// A bumpy sphere whose bump apexes play the role of annotated interest
/// points.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub id: String,
    pub mesh: TriMesh,
    pub apexes: Vec<usize>,
}

/// `count` bumpy spheres with 4 to 6 well separated hemispherical bumps
/// each, scaled and jittered differently. On level 4 a bump spans about two
/// vertex rings, so its apex is the unique summit.
pub fn synthetic_models(count: usize, subdivisions: u32, seed: u64) -> Vec<SyntheticModel> {
    (0..count)
        .map(|i| {
            let s = seed.wrapping_mul(1000).wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let bumps = rng.random_range(4..=6);
            let apexes = spread_vertices(subdivisions, bumps, 0.9, s);
            let scale = rng.random_range(0.5..3.0);
            let mesh = bumpy_sphere(subdivisions, &apexes, 0.12, 0.12, 0.004, s).scaled(scale);
            SyntheticModel {
                id: format!("synth{i:02}"),
                mesh,
                apexes,
            }
        })
        .collect()
}

/// Simulated annotators: each subject clicks each apex with probability
/// `hit_rate`, landing on the apex or one of its ring neighbors, plus one
/// stray click somewhere on the mesh.
pub fn synthetic_clicks(
    model: &SyntheticModel,
    subjects: usize,
    hit_rate: f64,
    seed: u64,
) -> ClickSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.mesh.vertex_count();
    let subjects = (0..subjects)
        .map(|k| {
            let mut clicks = Vec::new();
            for &a in &model.apexes {
                if rng.random::<f64>() < hit_rate {
                    let ring = model.mesh.ring(a);
                    let v = if rng.random::<f64>() < 0.5 || ring.is_empty() {
                        a
                    } else {
                        ring[rng.random_range(0..ring.len())]
                    };
                    clicks.push(Click::Vertex(v));
                }
            }
            clicks.push(Click::Vertex(rng.random_range(0..n)));
            SubjectClicks {
                subject: format!("subject{k:02}"),
                clicks,
            }
        })
        .collect();
    ClickSet::new(model.id.clone(), subjects).expect("subject ids are distinct")
}

/// Writes `meshes/<id>.off` and `clicks/<id>.clicks` under `root`.
pub fn write_dataset(
    root: &std::path::Path,
    models: &[SyntheticModel],
    subjects: usize,
    seed: u64,
) -> Result<()> {
    let meshes = root.join("meshes");
    let clicks = root.join("clicks");
    for d in [&meshes, &clicks] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for (i, m) in models.iter().enumerate() {
        let p = meshes.join(format!("{}.off", m.id));
        std::fs::write(&p, write_off(&m.mesh)).map_err(|e| Error::io(&p, e))?;
        let c = synthetic_clicks(m, subjects, 0.85, seed.wrapping_add(i as u64));
        let p = clicks.join(format!("{}.clicks", m.id));
        std::fs::write(&p, write_clicks(&c)?).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for s in 0..4 {
            let m = icosphere(s, 1.0);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(s) + 2);
            assert_eq!(m.face_count(), 20 * 4usize.pow(s));
        }
    }

    #[test]
    fn bumps_raise_apexes() {
        let m = bumpy_sphere(3, &[0, 100], 0.3, 0.2, 0.0, 0);
        assert!((m.vertex(0).coords.norm() - 1.2).abs() < 1e-12);
        assert!((m.vertex(100).coords.norm() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn spread_respects_separation() {
        let (verts, _) = icosphere_unit(3);
        let picks = spread_vertices(3, 6, 0.8, 1);
        assert_eq!(picks.len(), 6);
        for &a in &picks {
            for &b in &picks {
                if a != b {
                    assert!(verts[a].coords.dot(&verts[b].coords).acos() >= 0.8);
                }
            }
        }
    }
}
