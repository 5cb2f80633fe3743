//! Ground-truth interest points from annotator clicks.

mod io;

use std::collections::BTreeMap;

use nalgebra::Point3;

pub use io::{
    parse_clicks, parse_ground_truth, read_clicks, read_ground_truth, write_clicks,
    write_ground_truth,
};

use crate::mesh::{geodesic_distances, SpatialIndex, TriMesh};
use crate::{exec, Error, Result};

/// Clicks further than this fraction of the diameter outside the bounding
/// box are dropped.
pub const BOUNDS_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Click {
    Vertex(usize),
    Point(Point3<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectClicks {
    pub subject: String,
    pub clicks: Vec<Click>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClickSet {
    pub model: String,
    pub subjects: Vec<SubjectClicks>,
}

impl ClickSet {
    pub fn new(model: impl Into<String>, subjects: Vec<SubjectClicks>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &subjects {
            if !seen.insert(s.subject.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate subject id {}",
                    s.subject
                )));
            }
        }
        Ok(ClickSet {
            model: model.into(),
            subjects,
        })
    }

    pub fn click_count(&self) -> usize {
        self.subjects.iter().map(|s| s.clicks.len()).sum()
    }

    /// Maps every click to a vertex, one entry per (subject, vertex). The
    /// result is sorted, so it does not depend on subject or click order.
    pub fn resolve(&self, mesh: &TriMesh) -> Result<Vec<usize>> {
        let nv = mesh.vertex_count();
        let needs_index = self
            .subjects
            .iter()
            .any(|s| s.clicks.iter().any(|c| matches!(c, Click::Point(_))));
        let index = needs_index.then(|| SpatialIndex::new(mesh.vertices()));
        let (lo, hi) = bounds(mesh);
        let slack = BOUNDS_SLACK * mesh.diameter();
        let mut out = Vec::new();
        for s in &self.subjects {
            let mut verts = Vec::with_capacity(s.clicks.len());
            for c in &s.clicks {
                match *c {
                    Click::Vertex(v) if v < nv => verts.push(v),
                    Click::Vertex(v) => {
                        return Err(Error::InvalidArgument(format!(
                            "subject {} clicked vertex {v}, mesh has {nv}",
                            s.subject
                        )))
                    }
                    Click::Point(p) => {
                        let outside = (0..3).any(|k| p[k] < lo[k] - slack || p[k] > hi[k] + slack);
                        if outside || !(p.coords.iter().all(|x| x.is_finite())) {
                            log::warn!(
                                "model {}: subject {} click at ({}, {}, {}) lies outside the mesh bounds, ignored",
                                self.model,
                                s.subject,
                                p.x,
                                p.y,
                                p.z
                            );
                            continue;
                        }
                        let nn = index
                            .as_ref()
                            .expect("index built for point clicks")
                            .knn_point(&p, 1, None);
                        verts.push(nn.neighbors[0].index);
                    }
                }
            }
            verts.sort_unstable();
            verts.dedup();
            out.extend(verts);
        }
        out.sort_unstable();
        Ok(out)
    }
}

fn bounds(mesh: &TriMesh) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in mesh.vertices() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruthPoint {
    pub vertex: usize,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub model: String,
    pub sigma: f64,
    pub n: usize,
    /// Sorted by vertex.
    pub points: Vec<GroundTruthPoint>,
}

impl GroundTruth {
    pub fn vertices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.vertex).collect()
    }
}

/// All (σ, n) cells computed for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTable {
    pub model: String,
    pub cells: Vec<GroundTruth>,
}

impl GroundTruthTable {
    pub fn get(&self, sigma: f64, n: usize) -> Option<&GroundTruth> {
        self.cells
            .iter()
            .find(|c| c.n == n && same_sigma(c.sigma, sigma))
    }
}

pub(crate) fn same_sigma(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn check_params(sigma: f64, n: usize) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "sigma must lie in (0, 0.1], got {sigma}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(())
}

/// Geodesic distances between distinct click vertices.
#[derive(Debug, Clone)]
pub struct ClickDistances {
    /// Distinct vertices, ascending.
    pub vertices: Vec<usize>,
    /// Clicks landing on each vertex.
    pub multiplicity: Vec<usize>,
    /// Row-major `vertices.len()²` matrix.
    pub dist: Vec<f64>,
}

impl ClickDistances {
    pub fn compute(mesh: &TriMesh, clicks: &[usize]) -> Result<Self> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in clicks {
            *counts.entry(c).or_default() += 1;
        }
        let vertices: Vec<usize> = counts.keys().copied().collect();
        let multiplicity: Vec<usize> = counts.values().copied().collect();
        let rows = exec::map_slice(&vertices, |&v| {
            geodesic_distances(mesh, &[v])
                .map(|d| vertices.iter().map(|&u| d[u]).collect::<Vec<f64>>())
        });
        let mut dist = Vec::with_capacity(vertices.len() * vertices.len());
        for r in rows {
            dist.extend(r?);
        }
        // Dijkstra sums edges in different orders from each end; keep the
        // matrix exactly symmetric.
        let k = vertices.len();
        for i in 0..k {
            for j in i + 1..k {
                let m = dist[i * k + j].min(dist[j * k + i]);
                dist[i * k + j] = m;
                dist[j * k + i] = m;
            }
        }
        Ok(ClickDistances {
            vertices,
            multiplicity,
            dist,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.vertices.len() + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Representative {
    /// Index into `ClickDistances::vertices`.
    slot: usize,
    support: usize,
    cost: f64,
}

/// Clusters clicks whose pairwise distances are known. `threshold` is the
/// link distance 2σd_M.
pub fn cluster_with_distances(
    d: &ClickDistances,
    threshold: f64,
    n: usize,
) -> Vec<GroundTruthPoint> {
    let k = d.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..k {
        for j in i + 1..k {
            if d.get(i, j) < threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..k {
        let root = find(&mut parent, i);
        members.entry(root).or_default().push(i);
    }
    let mut reps = Vec::new();
    for slots in members.values() {
        let support: usize = slots.iter().map(|&s| d.multiplicity[s]).sum();
        if support < n {
            continue;
        }
        let mut best: Option<Representative> = None;
        for &s in slots {
            let cost: f64 = slots
                .iter()
                .map(|&t| d.multiplicity[t] as f64 * d.get(s, t))
                .sum();
            // Slots ascend with vertex id, so the first minimum is the lowest vertex.
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(Representative {
                    slot: s,
                    support,
                    cost,
                });
            }
        }
        reps.extend(best);
    }
    merge_representatives(d, &mut reps, threshold);
    let mut points: Vec<GroundTruthPoint> = reps
        .iter()
        .map(|r| GroundTruthPoint {
            vertex: d.vertices[r.slot],
            support: r.support,
        })
        .collect();
    points.sort_by_key(|p| p.vertex);
    points
}

/// Merges the closest pair of representatives under `threshold` until none
/// remains. The survivor has more support, then lower cost, then lower
/// vertex, and absorbs the other's support.
fn merge_representatives(d: &ClickDistances, reps: &mut Vec<Representative>, threshold: f64) {
    loop {
        let mut closest: Option<(f64, usize, usize)> = None;
        for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                let dist = d.get(reps[a].slot, reps[b].slot);
                if dist < threshold && closest.is_none_or(|c| dist < c.0) {
                    closest = Some((dist, a, b));
                }
            }
        }
        let Some((_, a, b)) = closest else { return };
        let (ra, rb) = (reps[a], reps[b]);
        let key = |r: &Representative| (std::cmp::Reverse(r.support), r.cost, r.slot);
        let a_wins = key(&ra).partial_cmp(&key(&rb)) == Some(std::cmp::Ordering::Less);
        let (keep, drop) = if a_wins { (a, b) } else { (b, a) };
        reps[keep].support += reps[drop].support;
        reps.remove(drop);
    }
}

/// Ground truth for one (σ, n) cell.
pub fn cluster_clicks(
    mesh: &TriMesh,
    clicks: &ClickSet,
    sigma: f64,
    n: usize,
) -> Result<GroundTruth> {
    check_params(sigma, n)?;
    if clicks.click_count() == 0 {
        return Err(Error::InvalidArgument(format!(
            "model {} has no clicks",
            clicks.model
        )));
    }
    let resolved = clicks.resolve(mesh)?;
    let d = ClickDistances::compute(mesh, &resolved)?;
    Ok(GroundTruth {
        model: clicks.model.clone(),
        sigma,
        n,
        points: cluster_with_distances(&d, 2.0 * sigma * mesh.diameter(), n),
    })
}

/// Every (σ, n) cell, sharing one distance computation.
pub fn cluster_grid(
    mesh: &TriMesh,
    clicks: &ClickSet,
    sigmas: &[f64],
    ns: &[usize],
) -> Result<GroundTruthTable> {
    for &s in sigmas {
        for &n in ns {
            check_params(s, n)?;
        }
    }
    if clicks.click_count() == 0 {
        return Err(Error::InvalidArgument(format!(
            "model {} has no clicks",
            clicks.model
        )));
    }
    let resolved = clicks.resolve(mesh)?;
    let d = ClickDistances::compute(mesh, &resolved)?;
    let mut cells = Vec::new();
    for &sigma in sigmas {
        for &n in ns {
            cells.push(GroundTruth {
                model: clicks.model.clone(),
                sigma,
                n,
                points: cluster_with_distances(&d, 2.0 * sigma * mesh.diameter(), n),
            });
        }
    }
    Ok(GroundTruthTable {
        model: clicks.model.clone(),
        cells,
    })
}
