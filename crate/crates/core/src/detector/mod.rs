//! Training-set assembly, scoring and non-maximum suppression.

mod io;
mod nms;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use io::{
    parse_detections, read_detections, write_detections, DetectionHeader, DETECTION_VERSION,
};
pub use nms::{nms, Detection, DetectionResult};

use crate::attributes::{AttributeMatrix, NUM_ATTRIBUTES, SCHEMA_VERSION};
use crate::forest::{train_forest, ForestParams, RandomForestModel, RowId, TrainingSet};
use crate::groundtruth::GroundTruthTable;
use crate::mesh::{geodesic_distances, TriMesh};
use crate::{exec, Error, Result};

/// Which ground-truth cells make a vertex positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingPolicy {
    pub sigmas: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
}

impl LabelingPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "labeling policy needs at least one sigma and 1 <= n_min <= n_max, got {:?} and {}..={}",
                self.sigmas, self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

/// Union of the representatives over every cell of the policy.
pub fn positive_vertices(
    table: &GroundTruthTable,
    policy: &LabelingPolicy,
) -> Result<BTreeSet<usize>> {
    policy.validate()?;
    let mut missing = Vec::new();
    let mut out = BTreeSet::new();
    for &sigma in &policy.sigmas {
        for n in policy.n_min..=policy.n_max {
            match table.get(sigma, n) {
                Some(cell) => out.extend(cell.points.iter().map(|p| p.vertex)),
                None => missing.push(format!("{sigma}:{n}")),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(format!(
            "model {}: {}",
            table.model,
            missing.join(", ")
        )));
    }
    Ok(out)
}

pub fn build_labels(
    table: &GroundTruthTable,
    policy: &LabelingPolicy,
    vertex_count: usize,
) -> Result<Vec<bool>> {
    let pos = positive_vertices(table, policy)?;
    let mut labels = vec![false; vertex_count];
    for v in pos {
        if v >= vertex_count {
            return Err(Error::InvalidArgument(format!(
                "model {}: ground-truth vertex {v} out of range ({vertex_count} vertices)",
                table.model
            )));
        }
        labels[v] = true;
    }
    Ok(labels)
}

/// Geodesic distance from each listed vertex to the nearest other listed
/// vertex, in model units.
pub fn nearest_other_distances(mesh: &TriMesh, vertices: &[usize]) -> Result<Vec<f64>> {
    exec::map_slice(vertices, |&v| {
        let d = geodesic_distances(mesh, &[v])?;
        Ok(vertices
            .iter()
            .filter(|&&u| u != v)
            .map(|&u| d[u])
            .fold(f64::INFINITY, f64::min))
    })
    .into_iter()
    .collect()
}

/// Mean nearest-other ground-truth distance pooled over all vertices of all
/// models, in units of each model's diameter. Models with fewer than two
/// ground-truth vertices are skipped; `None` when nothing contributes.
pub fn compute_psi(models: &[(&TriMesh, &[usize])]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (mesh, gt) in models {
        let distinct: BTreeSet<usize> = gt.iter().copied().collect();
        if distinct.len() < 2 {
            log::warn!(
                "skipping a model with {} ground-truth vertices when computing psi",
                distinct.len()
            );
            continue;
        }
        let distinct: Vec<usize> = distinct.into_iter().collect();
        for d in nearest_other_distances(mesh, &distinct)? {
            if d.is_finite() {
                sum += d / mesh.diameter();
                count += 1;
            }
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    pub c: f64,
    /// Fraction of the diameter.
    pub psi: f64,
}

impl NmsConfig {
    pub fn radius(&self, mesh: &TriMesh) -> Result<f64> {
        if !(self.c > 0.0 && self.psi > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "NMS needs c > 0 and psi > 0, got c = {} and psi = {}",
                self.c, self.psi
            )));
        }
        Ok(self.c * self.psi * mesh.diameter())
    }
}

fn check_matrix(mesh: &TriMesh, attrs: &AttributeMatrix) -> Result<()> {
    if attrs.len() != mesh.vertex_count() {
        return Err(Error::Schema(format!(
            "model {}: {} attribute rows for {} vertices",
            attrs.model_id,
            attrs.len(),
            mesh.vertex_count()
        )));
    }
    Ok(())
}

/// Interest probability of every vertex.
pub fn score(forest: &RandomForestModel, attrs: &AttributeMatrix) -> Result<Vec<f64>> {
    if forest.attributes != NUM_ATTRIBUTES || forest.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "forest expects {} attributes (schema {}), matrices have {} (schema {})",
            forest.attributes, forest.schema_version, NUM_ATTRIBUTES, SCHEMA_VERSION
        )));
    }
    forest.predict_proba_all(attrs.rows.iter().map(|r| &r[..]))
}

/// Scores a mesh and suppresses non-maxima.
pub fn detect(
    forest: &RandomForestModel,
    mesh: &TriMesh,
    attrs: &AttributeMatrix,
    config: &NmsConfig,
) -> Result<DetectionResult> {
    check_matrix(mesh, attrs)?;
    let radius = config.radius(mesh)?;
    let probs = score(forest, attrs)?;
    let candidates: Vec<(usize, f64)> = probs
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, p)| p > 0.5)
        .collect();
    Ok(nms(&attrs.model_id, &candidates, mesh, radius))
}

/// One model as the pipeline sees it.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub id: String,
    pub mesh: TriMesh,
    pub attributes: AttributeMatrix,
    pub ground_truth: GroundTruthTable,
}

pub fn training_set(
    models: &[&ModelInput],
    ids: &[u32],
    policy: &LabelingPolicy,
) -> Result<TrainingSet> {
    let mut data = TrainingSet::new(NUM_ATTRIBUTES);
    for (m, &mid) in models.iter().zip(ids) {
        check_matrix(&m.mesh, &m.attributes)?;
        let labels = build_labels(&m.ground_truth, policy, m.mesh.vertex_count())?;
        for (v, (row, &label)) in m.attributes.rows.iter().zip(&labels).enumerate() {
            data.push(
                row,
                label,
                RowId {
                    model: mid,
                    vertex: v as u32,
                },
            )?;
        }
    }
    Ok(data)
}

/// Cross-validation folds, given as test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FoldSpec {
    Explicit { folds: Vec<Vec<String>> },
    Random { count: usize, seed: u64 },
}

impl FoldSpec {
    /// Test sets in fold order. Every model lands in exactly one.
    pub fn resolve(&self, model_ids: &[String]) -> Result<Vec<Vec<String>>> {
        let known: BTreeSet<&String> = model_ids.iter().collect();
        if known.len() != model_ids.len() {
            return Err(Error::InvalidArgument("duplicate model ids".into()));
        }
        let folds = match self {
            FoldSpec::Explicit { folds } => folds.clone(),
            FoldSpec::Random { count, seed } => {
                if *count < 2 || *count > model_ids.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cannot split {} models into {count} folds",
                        model_ids.len()
                    )));
                }
                let mut ids: Vec<String> = known.iter().map(|s| s.to_string()).collect();
                ids.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                let mut folds = vec![Vec::new(); *count];
                for (i, id) in ids.into_iter().enumerate() {
                    folds[i % count].push(id);
                }
                for f in &mut folds {
                    f.sort();
                }
                folds
            }
        };
        let mut seen = BTreeSet::new();
        for f in &folds {
            if f.is_empty() {
                return Err(Error::InvalidArgument("empty fold".into()));
            }
            for id in f {
                if !known.contains(id) {
                    return Err(Error::InvalidArgument(format!(
                        "fold lists unknown model {id}"
                    )));
                }
                if !seen.insert(id) {
                    return Err(Error::InvalidArgument(format!(
                        "model {id} appears in more than one fold"
                    )));
                }
            }
        }
        if seen.len() != known.len() {
            let missing: Vec<&str> = known
                .iter()
                .filter(|k| !seen.contains(*k))
                .map(|s| s.as_str())
                .collect();
            return Err(Error::InvalidArgument(format!(
                "models in no fold: {}",
                missing.join(", ")
            )));
        }
        Ok(folds)
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutput {
    pub fold: usize,
    pub test_models: Vec<String>,
    pub forest: RandomForestModel,
    pub forest_hash: String,
    pub psi: f64,
    pub detections: Vec<DetectionResult>,
}

/// Forest and ψ learned from every model not in `test`. `models` must be
/// sorted by id; the position in that list is the row identity used for
/// sampling.
pub fn train_fold(
    models: &[ModelInput],
    test: &[String],
    params: &ForestParams,
    policy: &LabelingPolicy,
) -> Result<(RandomForestModel, f64)> {
    if models.windows(2).any(|w| w[0].id >= w[1].id) {
        return Err(Error::InvalidArgument(
            "models must be sorted by id and unique".into(),
        ));
    }
    let (train, ids): (Vec<&ModelInput>, Vec<u32>) = models
        .iter()
        .enumerate()
        .filter(|(_, m)| !test.contains(&m.id))
        .map(|(i, m)| (m, i as u32))
        .unzip();
    if train.is_empty() {
        return Err(Error::InvalidArgument(
            "no training models left after holding out the test fold".into(),
        ));
    }
    let data = training_set(&train, &ids, policy)?;
    let gt: Vec<Vec<usize>> = train
        .iter()
        .map(|m| positive_vertices(&m.ground_truth, policy).map(|s| s.into_iter().collect()))
        .collect::<Result<_>>()?;
    let pairs: Vec<(&TriMesh, &[usize])> = train
        .iter()
        .zip(&gt)
        .map(|(m, g)| (&m.mesh, &g[..]))
        .collect();
    let psi = compute_psi(&pairs)?.ok_or_else(|| {
        Error::InvalidArgument(
            "no training model has two ground-truth vertices, psi is undefined".into(),
        )
    })?;
    let counts = data.class_counts();
    log::info!(
        "training on {} models: {} interest and {} other vertices, psi = {psi:.6}",
        train.len(),
        counts[1],
        counts[0]
    );
    let forest = train_forest(&data, params)?;
    Ok((forest, psi))
}

/// Cross-validated training and detection.
pub fn run_pipeline(
    models: &[ModelInput],
    folds: &[Vec<String>],
    params: &ForestParams,
    policy: &LabelingPolicy,
    c: f64,
) -> Result<Vec<FoldOutput>> {
    let mut out = Vec::with_capacity(folds.len());
    for (k, test) in folds.iter().enumerate() {
        let (forest, psi) = train_fold(models, test, params, policy)?;
        let forest_hash = forest.hash()?;
        let config = NmsConfig { c, psi };
        let detections = models
            .iter()
            .filter(|m| test.contains(&m.id))
            .map(|m| detect(&forest, &m.mesh, &m.attributes, &config))
            .collect::<Result<Vec<_>>>()?;
        out.push(FoldOutput {
            fold: k,
            test_models: test.clone(),
            forest,
            forest_hash,
            psi,
            detections,
        });
    }
    Ok(out)
}
