use crate::mesh::{SpatialIndex, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub vertex: usize,
    pub probability: f64,
    /// Kept only because an equal-probability neighbor had a higher index.
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub model: String,
    /// Suppression radius in model units.
    pub radius: f64,
    /// Descending probability, then ascending vertex.
    pub detections: Vec<Detection>,
}

impl DetectionResult {
    pub fn vertices(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.vertex).collect()
    }

    pub fn tie_count(&self) -> usize {
        self.detections.iter().filter(|d| d.tied).count()
    }
}

/// Keeps each candidate that no other candidate within Euclidean `radius`
/// beats. A candidate is beaten by a higher probability, or by an equal
/// probability at a lower vertex index. Every candidate takes part in the
/// comparison, whether or not it is itself kept.
pub fn nms(
    model: &str,
    candidates: &[(usize, f64)],
    mesh: &TriMesh,
    radius: f64,
) -> DetectionResult {
    let points: Vec<_> = candidates.iter().map(|&(v, _)| mesh.vertex(v)).collect();
    let index = SpatialIndex::new(&points);
    let mut detections: Vec<Detection> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, &(v, p))| {
            let mut tied = false;
            for n in index.within_radius(&points[i], radius) {
                if n.index == i {
                    continue;
                }
                let (u, q) = candidates[n.index];
                if q > p || (q == p && u < v) {
                    return None;
                }
                tied |= q == p;
            }
            Some(Detection {
                vertex: v,
                probability: p,
                tied,
            })
        })
        .collect();
    detections.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(a.vertex.cmp(&b.vertex))
    });
    let ties = detections.iter().filter(|d| d.tied).count();
    if ties > 0 {
        log::warn!("model {model}: {ties} detections kept on a probability tie");
    }
    DetectionResult {
        model: model.to_string(),
        radius,
        detections,
    }
}
