use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::{Error, Result};

/// How each tree's training sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    /// A fixed pool holding half of the positives is drawn once per run;
    /// every tree then receives `n` positives drawn with replacement from the
    /// pool and `ratio · n` negatives drawn with replacement from all
    /// negatives.
    Balanced { ratio: f64 },
    /// Plain bootstrap of the full training set (ablation baseline).
    Bootstrap,
}

impl Default for SamplingMode {
    fn default() -> Self {
        SamplingMode::Balanced { ratio: 1.0 }
    }
}

/// Row indices grouped by class, each in canonical (model, vertex) order so
/// that sampling depends on row identity rather than storage order.
#[derive(Debug, Clone)]
pub struct ClassIndex {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub all: Vec<usize>,
}

impl ClassIndex {
    pub fn new(data: &TrainingSet) -> Self {
        let mut all: Vec<usize> = (0..data.len()).collect();
        all.sort_by_key(|&i| data.id(i));
        let (positives, negatives) = all.iter().partition(|&&i| data.label(i));
        ClassIndex {
            positives,
            negatives,
            all,
        }
    }

    fn require_both(&self) -> Result<()> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(Error::MissingClass {
                positives: self.positives.len(),
                negatives: self.negatives.len(),
            });
        }
        Ok(())
    }
}

/// Selects the positive pool: `max(1, P/2)` distinct positives.
pub fn select_positive_pool<R: Rng + ?Sized>(
    classes: &ClassIndex,
    rng: &mut R,
) -> Result<Vec<usize>> {
    classes.require_both()?;
    let total = classes.positives.len();
    let n = (total / 2).max(1);
    let mut picks = index::sample(rng, total, n).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|k| classes.positives[k]).collect())
}

/// One tree's balanced sample drawn from an already selected pool.
pub fn bootstrap_from_pool<R: Rng + ?Sized>(
    pool: &[usize],
    negatives: &[usize],
    ratio: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if pool.is_empty() || negatives.is_empty() {
        return Err(Error::MissingClass {
            positives: pool.len(),
            negatives: negatives.len(),
        });
    }
    if !(ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling ratio must be positive, got {ratio}"
        )));
    }
    let n = pool.len();
    let k = ((ratio * n as f64).round() as usize).max(1);
    let mut out = Vec::with_capacity(n + k);
    out.extend((0..n).map(|_| pool[rng.random_range(0..n)]));
    out.extend((0..k).map(|_| negatives[rng.random_range(0..negatives.len())]));
    Ok(out)
}

/// Pool selection followed by a single balanced draw.
pub fn balanced_bootstrap<R: Rng + ?Sized>(
    data: &TrainingSet,
    ratio: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let classes = ClassIndex::new(data);
    let pool = select_positive_pool(&classes, rng)?;
    bootstrap_from_pool(&pool, &classes.negatives, ratio, rng)
}

/// Standard bootstrap: `N` rows drawn with replacement.
pub fn plain_bootstrap<R: Rng + ?Sized>(classes: &ClassIndex, rng: &mut R) -> Vec<usize> {
    let n = classes.all.len();
    (0..n)
        .map(|_| classes.all[rng.random_range(0..n)])
        .collect()
}
