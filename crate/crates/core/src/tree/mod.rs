//! CART classification tree with Gini splitting.
//!
//! Splits are axis-aligned: a sample goes left when its feature value is
//! strictly less than the node threshold. Candidate thresholds are midpoints
//! between consecutive distinct values. Leaves keep the full class
//! histogram; a leaf whose top count is shared by several classes predicts
//! [`Prediction::Unknown`].

mod flat;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use flat::{FlatNode, FlatTree, MODEL_MAGIC, MODEL_VERSION, NOT_LEAF, UNKNOWN_CLASS};

use crate::features::{FeatureSelection, FeatureVector, TrainingSample};
use crate::kernels::Implementation;
use crate::{Error, Result};

pub const CLASS_COUNT: usize = Implementation::COUNT;

/// Per-class sample counts, indexed by [`Implementation::ordinal`].
pub type Histogram = [u32; CLASS_COUNT];

// Splits must beat this decrease; guards against rounding noise on splits
// that leave the class mix unchanged.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    Known(Implementation),
    Unknown,
}

impl Prediction {
    pub fn known(self) -> Option<Implementation> {
        match self {
            Prediction::Known(imp) => Some(imp),
            Prediction::Unknown => None,
        }
    }
}

/// Gini impurity `1 - sum_c (n_c / n)^2`.
pub fn gini(histogram: &[u32]) -> Result<f64> {
    let total: u64 = histogram.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Err(Error::Empty("label histogram"));
    }
    Ok(gini_of(histogram, total))
}

#[inline]
fn gini_of(histogram: &[u32], total: u64) -> f64 {
    let n = total as f64;
    1.0 - histogram
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Majority class of a histogram, `Unknown` when the top count is shared.
pub fn majority(histogram: &Histogram) -> Prediction {
    let top = *histogram.iter().max().expect("fixed-size histogram");
    let mut winners = histogram.iter().enumerate().filter(|&(_, &c)| c == top);
    match (winners.next(), winners.next()) {
        (Some((class, _)), None) if top > 0 => {
            Prediction::Known(Implementation::from_ordinal(class).expect("class in range"))
        }
        _ => Prediction::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 16,
            min_samples_leaf: 5,
            min_samples_split: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 || self.min_samples_split == 0 {
            return Err(Error::InvalidParams(
                "max_depth, min_samples_leaf and min_samples_split must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    /// Position in the feature selection.
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Internal {
        split: Split,
        left: usize,
        right: usize,
    },
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub histogram: Histogram,
    pub samples: u32,
    pub depth: usize,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn prediction(&self) -> Prediction {
        majority(&self.histogram)
    }
}

/// Row-major projected feature matrix with labels.
struct Dataset {
    values: Vec<f64>,
    labels: Vec<u8>,
    width: usize,
}

impl Dataset {
    fn new<'a>(
        rows: impl Iterator<Item = (&'a [f64], Implementation)>,
        width: usize,
    ) -> Self {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, label) in rows {
            debug_assert_eq!(row.len(), width);
            values.extend_from_slice(row);
            labels.push(label.ordinal() as u8);
        }
        Dataset { values, labels, width }
    }

    #[inline]
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.width + feature]
    }

    fn histogram(&self, rows: &[usize]) -> Histogram {
        let mut h = [0; CLASS_COUNT];
        for &r in rows {
            h[self.labels[r] as usize] += 1;
        }
        h
    }

    /// Best split of `rows`, scanning features in order and thresholds
    /// ascending; only a strictly larger decrease replaces the incumbent, so
    /// ties go to the lowest feature and then the lowest threshold.
    fn best_split(&self, rows: &[usize], min_samples_leaf: usize) -> Option<Split> {
        let n = rows.len();
        if n < 2 {
            return None;
        }
        let parent = self.histogram(rows);
        let parent_gini = gini_of(&parent, n as u64);
        if parent_gini == 0.0 {
            return None;
        }
        let mut best: Option<Split> = None;
        let mut order = rows.to_vec();
        for feature in 0..self.width {
            order.sort_unstable_by(|&a, &b| self.value(a, feature).total_cmp(&self.value(b, feature)));
            let mut left = [0u32; CLASS_COUNT];
            let mut right = parent;
            for i in 0..n - 1 {
                let label = self.labels[order[i]] as usize;
                left[label] += 1;
                right[label] -= 1;
                let lo = self.value(order[i], feature);
                let hi = self.value(order[i + 1], feature);
                if lo.total_cmp(&hi).is_eq() {
                    continue;
                }
                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < min_samples_leaf || n_right < min_samples_leaf {
                    continue;
                }
                let decrease = parent_gini
                    - (n_left as f64 / n as f64) * gini_of(&left, n_left as u64)
                    - (n_right as f64 / n as f64) * gini_of(&right, n_right as u64);
                if decrease > MIN_DECREASE && best.is_none_or(|b| decrease > b.impurity_decrease) {
                    best = Some(Split {
                        feature,
                        threshold: midpoint(lo, hi),
                        impurity_decrease: decrease,
                    });
                }
            }
        }
        best
    }
}

/// A threshold `t` with `lo < t <= hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Best split over raw rows; see [`Tree::fit`] for the rules.
pub fn best_split(rows: &[Vec<f64>], labels: &[Implementation], min_samples_leaf: usize) -> Option<Split> {
    let width = rows.first()?.len();
    let data = Dataset::new(rows.iter().map(Vec::as_slice).zip(labels.iter().copied()), width);
    let all: Vec<usize> = (0..rows.len()).collect();
    data.best_split(&all, min_samples_leaf.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    selection: FeatureSelection,
    config: TrainConfig,
}

impl Tree {
    /// Grows a tree on `samples` projected through `selection`. Nodes are
    /// stored in preorder with the root at index 0.
    pub fn fit(samples: &[TrainingSample], selection: &FeatureSelection, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if samples.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let projected: Vec<Vec<f64>> = samples.iter().map(|s| s.features.project(selection)).collect();
        let data = Dataset::new(
            projected.iter().map(Vec::as_slice).zip(samples.iter().map(|s| s.label)),
            selection.len(),
        );
        let mut tree = Tree {
            nodes: Vec::new(),
            selection: selection.clone(),
            config: config.clone(),
        };
        let mut rows: Vec<usize> = (0..samples.len()).collect();
        tree.grow(&data, &mut rows, 0);
        Ok(tree)
    }

    fn grow(&mut self, data: &Dataset, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            histogram: data.histogram(rows),
            samples: rows.len() as u32,
            depth,
            kind: NodeKind::Leaf,
        });
        let can_split = depth < self.config.max_depth && rows.len() >= self.config.min_samples_split;
        let Some(split) = can_split
            .then(|| data.best_split(rows, self.config.min_samples_leaf))
            .flatten()
        else {
            return id;
        };
        // Stable partition so child row order does not depend on the sort above.
        rows.sort_by_key(|&r| data.value(r, split.feature) >= split.threshold);
        let cut = rows.partition_point(|&r| data.value(r, split.feature) < split.threshold);
        let (left_rows, right_rows) = rows.split_at_mut(cut);
        let left = self.grow(data, left_rows, depth + 1);
        let right = self.grow(data, right_rows, depth + 1);
        self.nodes[id].kind = NodeKind::Internal { split, left, right };
        id
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn selection(&self) -> &FeatureSelection {
        &self.selection
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn predict(&self, features: &FeatureVector) -> Prediction {
        self.predict_projected(&features.project(&self.selection))
    }

    pub fn predict_projected(&self, values: &[f64]) -> Prediction {
        let mut node = &self.nodes[0];
        loop {
            match node.kind {
                NodeKind::Leaf => return node.prediction(),
                NodeKind::Internal { split, left, right } => {
                    let next = if values[split.feature] < split.threshold { left } else { right };
                    node = &self.nodes[next];
                }
            }
        }
    }

    /// Normalized Gini importance per selected feature; all zeros when the
    /// tree is a single leaf.
    pub fn importance(&self) -> Vec<f64> {
        let mut weights = vec![0.0; self.selection.len()];
        let total = self.nodes[0].samples as f64;
        for node in &self.nodes {
            if let NodeKind::Internal { split, .. } = node.kind {
                weights[split.feature] += node.samples as f64 / total * split.impurity_decrease;
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        weights
    }
}

/// Shuffles `samples` with `seed` and splits off `round(fraction * n)` for
/// training, keeping at least one sample on each side.
pub fn split_train_test<T: Clone>(samples: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParams(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 samples to split, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_len = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect();
    Ok((pick(&order[..train_len]), pick(&order[train_len..])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub samples: usize,
    pub top1_accuracy: f64,
    pub unknown_rate: f64,
    /// `confusion[actual][predicted]`; the last column counts unknown
    /// predictions.
    pub confusion: Vec<Vec<u32>>,
}

/// Scores predictions against labels. Unknown predictions count as wrong.
pub fn evaluate(tree: &Tree, test_set: &[TrainingSample]) -> Result<Evaluation> {
    evaluate_with(|fv| tree.predict(fv), test_set)
}

pub fn evaluate_with(
    predict: impl Fn(&FeatureVector) -> Prediction,
    test_set: &[TrainingSample],
) -> Result<Evaluation> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut confusion = vec![vec![0u32; CLASS_COUNT + 1]; CLASS_COUNT];
    let (mut correct, mut unknown) = (0usize, 0usize);
    for sample in test_set {
        let row = &mut confusion[sample.label.ordinal()];
        match predict(&sample.features) {
            Prediction::Known(imp) => {
                row[imp.ordinal()] += 1;
                correct += (imp == sample.label) as usize;
            }
            Prediction::Unknown => {
                row[CLASS_COUNT] += 1;
                unknown += 1;
            }
        }
    }
    let n = test_set.len() as f64;
    Ok(Evaluation {
        samples: test_set.len(),
        top1_accuracy: correct as f64 / n,
        unknown_rate: unknown as f64 / n,
        confusion,
    })
}

/// Sidecar description of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub selection: Vec<String>,
    pub config: TrainConfig,
    pub node_count: usize,
    pub depth: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub training_accuracy: f64,
    pub test_accuracy: f64,
    pub unknown_rate: f64,
    pub importances: Vec<(String, f64)>,
}
