//! Random forest classifier with class-balanced per-tree sampling.

mod gini;
mod sampling;
mod tree;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use gini::{gini_gain, gini_impurity, ClassCounts};
pub use sampling::{
    balanced_bootstrap, bootstrap_from_pool, plain_bootstrap, select_positive_pool, ClassIndex,
    SamplingMode,
};
pub use tree::{
    best_split, grow_tree, grow_tree_traced, midpoint, DecisionTree, Node, NodeTrace, GAIN_EPSILON,
};

use crate::attributes::SCHEMA_VERSION;
use crate::{exec, Error, Result};

pub const MODEL_FORMAT: &str = "interest3d-forest";
pub const MODEL_VERSION: u32 = 1;

/// RNG stream reserved for the positive pool; tree `t` uses stream `t`.
const POOL_STREAM: u64 = u64::MAX;

/// Identity of a training row, used for auditing and for ordering samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowId {
    pub model: u32,
    pub vertex: u32,
}

/// Row-major feature matrix with binary labels.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    width: usize,
    values: Vec<f64>,
    labels: Vec<bool>,
    ids: Vec<RowId>,
}

impl TrainingSet {
    pub fn new(width: usize) -> Self {
        TrainingSet {
            width,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: &[f64], label: bool, id: RowId) -> Result<()> {
        if row.len() != self.width {
            return Err(Error::InvalidArgument(format!(
                "row width {} does not match training width {}",
                row.len(),
                self.width
            )));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite attribute {} for model {} vertex {}",
                j + 1,
                id.model,
                id.vertex
            )));
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.ids.push(id);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }

    pub fn id(&self, i: usize) -> RowId {
        self.ids[i]
    }

    /// (non-interest, interest) row counts.
    pub fn class_counts(&self) -> ClassCounts {
        let pos = self.labels.iter().filter(|&&l| l).count();
        [self.len() - pos, pos]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Attributes sampled per node; `None` means `⌊√p⌋`.
    pub features_per_node: Option<usize>,
    pub sampling: SamplingMode,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            features_per_node: Some(5),
            sampling: SamplingMode::default(),
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_m(&self, p: usize) -> usize {
        self.features_per_node
            .unwrap_or_else(|| (p as f64).sqrt().floor() as usize)
            .clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub attributes: usize,
    pub features_per_node: usize,
    pub sampling: SamplingMode,
    pub seed: u64,
    pub schema_version: u32,
}

/// Per-tree sample indices for a run. Exposed so that tests can replay tree
/// growth independently.
pub fn tree_samples(data: &TrainingSet, params: &ForestParams) -> Result<Vec<Vec<usize>>> {
    let classes = ClassIndex::new(data);
    match params.sampling {
        SamplingMode::Balanced { ratio } => {
            let pool = select_positive_pool(&classes, &mut stream(params.seed, POOL_STREAM))?;
            (0..params.trees)
                .map(|t| {
                    bootstrap_from_pool(
                        &pool,
                        &classes.negatives,
                        ratio,
                        &mut stream(params.seed, t as u64),
                    )
                })
                .collect()
        }
        SamplingMode::Bootstrap => {
            if classes.all.is_empty() {
                return Err(Error::MissingClass {
                    positives: 0,
                    negatives: 0,
                });
            }
            Ok((0..params.trees)
                .map(|t| plain_bootstrap(&classes, &mut stream(params.seed, t as u64)))
                .collect())
        }
    }
}

/// RNG used for one tree: the bootstrap draw comes first, then growth.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn train_forest(data: &TrainingSet, params: &ForestParams) -> Result<RandomForestModel> {
    if params.trees == 0 {
        return Err(Error::InvalidArgument(
            "tree count must be at least 1".into(),
        ));
    }
    if data.width() == 0 {
        return Err(Error::InvalidArgument(
            "training set has no attributes".into(),
        ));
    }
    let m = params.resolved_m(data.width());
    let classes = ClassIndex::new(data);
    let pool = match params.sampling {
        SamplingMode::Balanced { .. } => Some(select_positive_pool(
            &classes,
            &mut stream(params.seed, POOL_STREAM),
        )?),
        SamplingMode::Bootstrap => {
            if data.is_empty() {
                return Err(Error::MissingClass {
                    positives: 0,
                    negatives: 0,
                });
            }
            None
        }
    };
    let grown: Vec<Result<DecisionTree>> = exec::map_range(params.trees, |t| {
        let mut rng = stream(params.seed, t as u64);
        let rows = match (params.sampling, &pool) {
            (SamplingMode::Balanced { ratio }, Some(pool)) => {
                bootstrap_from_pool(pool, &classes.negatives, ratio, &mut rng)?
            }
            _ => plain_bootstrap(&classes, &mut rng),
        };
        Ok(grow_tree(data, &rows, m, &mut rng))
    });
    let trees = grown.into_iter().collect::<Result<Vec<_>>>()?;
    log::debug!("trained {} trees, m = {m}", trees.len());
    Ok(RandomForestModel {
        trees,
        attributes: data.width(),
        features_per_node: m,
        sampling: params.sampling,
        seed: params.seed,
        schema_version: SCHEMA_VERSION,
    })
}

impl RandomForestModel {
    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.attributes {
            return Err(Error::Schema(format!(
                "row has {} attributes, model expects {}",
                row.len(),
                self.attributes
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite attribute value".into()));
        }
        Ok(())
    }

    /// Mean over trees of the interest proportion at the reached leaf.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        let sum: f64 = self.trees.iter().map(|t| t.proba(row)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Majority vote of per-tree labels; a tied vote is non-interest.
    pub fn predict_label(&self, row: &[f64]) -> Result<bool> {
        self.check_row(row)?;
        let votes = self.trees.iter().filter(|t| t.label(row)).count();
        Ok(2 * votes > self.trees.len())
    }

    pub fn predict_proba_all<'a, I>(&self, rows: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        exec::map_slice(&rows, |r| self.predict_proba(r))
            .into_iter()
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    schema_version: u32,
    attributes: usize,
    features_per_node: usize,
    tree_count: usize,
    seed: u64,
    sampling: SamplingMode,
    trees: Vec<TreeDocument>,
}

/// A tree as parallel node arrays. Leaves have `feature = -1`, children 0,
/// and carry counts; splits carry zero counts.
#[derive(Serialize, Deserialize)]
struct TreeDocument {
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    negatives: Vec<usize>,
    positives: Vec<usize>,
}

impl From<&RandomForestModel> for ModelDocument {
    fn from(m: &RandomForestModel) -> Self {
        let trees = m
            .trees
            .iter()
            .map(|t| {
                let mut d = TreeDocument {
                    feature: Vec::new(),
                    threshold: Vec::new(),
                    left: Vec::new(),
                    right: Vec::new(),
                    negatives: Vec::new(),
                    positives: Vec::new(),
                };
                for n in &t.nodes {
                    let (f, th, l, r, c) = match *n {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => (feature as i64, threshold, left, right, [0, 0]),
                        Node::Leaf { counts } => (-1, 0.0, 0, 0, counts),
                    };
                    d.feature.push(f);
                    d.threshold.push(th);
                    d.left.push(l);
                    d.right.push(r);
                    d.negatives.push(c[0]);
                    d.positives.push(c[1]);
                }
                d
            })
            .collect();
        ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            schema_version: m.schema_version,
            attributes: m.attributes,
            features_per_node: m.features_per_node,
            tree_count: m.trees.len(),
            seed: m.seed,
            sampling: m.sampling,
            trees,
        }
    }
}

impl TryFrom<ModelDocument> for RandomForestModel {
    type Error = Error;

    fn try_from(d: ModelDocument) -> Result<Self> {
        if d.format != MODEL_FORMAT || d.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format {} version {}",
                d.format, d.version
            )));
        }
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "model trained on attribute schema {}, this build uses {}",
                d.schema_version, SCHEMA_VERSION
            )));
        }
        if d.tree_count != d.trees.len() || d.trees.is_empty() {
            return Err(Error::Schema("tree count does not match tree list".into()));
        }
        let mut trees = Vec::with_capacity(d.trees.len());
        for (ti, t) in d.trees.into_iter().enumerate() {
            let n = t.feature.len();
            if [
                t.threshold.len(),
                t.left.len(),
                t.right.len(),
                t.negatives.len(),
                t.positives.len(),
            ]
            .iter()
            .any(|&l| l != n)
                || n == 0
            {
                return Err(Error::Schema(format!(
                    "tree {ti}: node arrays differ in length"
                )));
            }
            let mut nodes = Vec::with_capacity(n);
            for i in 0..n {
                let node = if t.feature[i] < 0 {
                    if t.negatives[i] + t.positives[i] == 0 {
                        return Err(Error::Schema(format!("tree {ti}: empty leaf {i}")));
                    }
                    Node::Leaf {
                        counts: [t.negatives[i], t.positives[i]],
                    }
                } else {
                    let feature = t.feature[i] as usize;
                    // Children always follow their parent, so traversal terminates.
                    if feature >= d.attributes
                        || t.left[i] <= i
                        || t.right[i] <= i
                        || t.left[i] >= n
                        || t.right[i] >= n
                    {
                        return Err(Error::Schema(format!(
                            "tree {ti}: malformed split node {i}"
                        )));
                    }
                    Node::Split {
                        feature,
                        threshold: t.threshold[i],
                        left: t.left[i],
                        right: t.right[i],
                    }
                };
                nodes.push(node);
            }
            trees.push(DecisionTree { nodes });
        }
        Ok(RandomForestModel {
            trees,
            attributes: d.attributes,
            features_per_node: d.features_per_node,
            sampling: d.sampling,
            seed: d.seed,
            schema_version: d.schema_version,
        })
    }
}
