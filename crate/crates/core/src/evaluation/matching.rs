/// Pairing between detections and ground-truth points at one tolerance.
/// Indices refer to positions in the detection and ground-truth lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    /// `(ground truth, detection)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_ground_truth: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Counts {
    /// Detections, N_A.
    pub detected: usize,
    /// Correct detections, N_C.
    pub correct: usize,
    /// Ground-truth points, N_G.
    pub ground_truth: usize,
}

impl Counts {
    pub fn false_positives(&self) -> usize {
        self.detected - self.correct
    }

    pub fn false_negatives(&self) -> usize {
        self.ground_truth - self.correct
    }

    /// Fraction of ground truth missed; 0 when there is no ground truth.
    pub fn fne(&self) -> f64 {
        ratio(self.false_negatives(), self.ground_truth)
    }

    /// Fraction of detections that are wrong; 0 when nothing was detected.
    pub fn fpe(&self) -> f64 {
        ratio(self.false_positives(), self.detected)
    }

    /// TP / (FP + TP + FN); 0 when all three are zero.
    pub fn iou(&self) -> f64 {
        ratio(
            self.correct,
            self.detected + self.ground_truth - self.correct,
        )
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            detected: self.detected + o.detected,
            correct: self.correct + o.correct,
            ground_truth: self.ground_truth + o.ground_truth,
        }
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Correspondence {
    pub fn counts(&self) -> Counts {
        Counts {
            detected: self.pairs.len() + self.unmatched_detections.len(),
            correct: self.pairs.len(),
            ground_truth: self.pairs.len() + self.unmatched_ground_truth.len(),
        }
    }
}

/// Pooled IOU over several models.
pub fn iou_setwise(counts: &[Counts]) -> f64 {
    counts.iter().copied().sum::<Counts>().iou()
}

/// Index of the nearest ground-truth point for each detection, ties going to
/// the lower index; `None` when every distance is infinite or there is no
/// ground truth.
pub fn nearest_ground_truth(dist: &[Vec<f64>]) -> Vec<Option<(usize, f64)>> {
    dist.iter()
        .map(|row| {
            row.iter()
                .copied()
                .enumerate()
                .filter(|(_, d)| d.is_finite())
                .fold(None, |best: Option<(usize, f64)>, (g, d)| match best {
                    Some((_, bd)) if bd <= d => best,
                    _ => Some((g, d)),
                })
        })
        .collect()
}

/// Greedy one-to-one matching. `dist[a][g]` is the distance from detection
/// `a` to ground-truth point `g`. Each detection proposes only its nearest
/// ground-truth point, and only within `tolerance`; proposals are accepted
/// in ascending distance (then detection, then ground-truth index) while
/// both ends are free.
pub fn match_detections(dist: &[Vec<f64>], ground_truth: usize, tolerance: f64) -> Correspondence {
    let nearest = nearest_ground_truth(dist);
    let mut proposals: Vec<(f64, usize, usize)> = nearest
        .iter()
        .enumerate()
        .filter_map(|(a, n)| n.filter(|&(_, d)| d <= tolerance).map(|(g, d)| (d, a, g)))
        .collect();
    proposals.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut gt_used = vec![false; ground_truth];
    let mut det_used = vec![false; dist.len()];
    let mut pairs = Vec::new();
    for (_, a, g) in proposals {
        if !gt_used[g] && !det_used[a] {
            gt_used[g] = true;
            det_used[a] = true;
            pairs.push((g, a));
        }
    }
    pairs.sort_unstable();
    Correspondence {
        pairs,
        unmatched_ground_truth: (0..ground_truth).filter(|&g| !gt_used[g]).collect(),
        unmatched_detections: (0..dist.len()).filter(|&a| !det_used[a]).collect(),
        tolerance,
    }
}
