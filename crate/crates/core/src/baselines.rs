//! Comparison classifiers: an entropy decision tree, a bagged random forest
//! of such trees, and Gaussian naive Bayes. The backpropagation network
//! baseline lives in [`crate::neural_net`].

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::rng::{self, Rng};
use crate::{Classifier, DimensionMismatch};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set has no {0:?} samples")]
    MissingClass(Label),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
}

// ---------------------------------------------------------------------------
// Decision tree
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

impl TreeConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.min_samples_leaf == 0 {
            return Err(ModelError::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        negatives: usize,
        positives: usize,
        /// Laplace-smoothed: `(positives + 1) / (n + 2)`.
        p_positive: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Samples with `value <= threshold`.
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn leaf(negatives: usize, positives: usize) -> Self {
        Node::Leaf {
            negatives,
            positives,
            p_positive: (positives as f64 + 1.0) / ((negatives + positives) as f64 + 2.0),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub root: Node,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        DimensionMismatch::check(self.n_features, features.len())?;
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { p_positive, .. } => return Ok(*p_positive),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if features[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        DecisionTree::predict_proba(self, features)
    }
}

/// Binary entropy in bits of a `(negatives, positives)` count pair.
pub fn entropy(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    [neg, pos]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

const GAIN_TIE_EPS: f64 = 1e-12;

struct Builder<'a> {
    data: &'a Dataset,
    cfg: TreeConfig,
    /// Features examined per split; `None` examines all of them.
    feature_subset: Option<usize>,
}

impl Builder<'_> {
    fn label(&self, i: usize) -> bool {
        self.data.samples()[i].label.is_positive()
    }

    fn value(&self, i: usize, f: usize) -> f64 {
        self.data.samples()[i].features[f]
    }

    /// Best midpoint threshold on one feature, or `None` if no threshold
    /// leaves at least `min_samples_leaf` samples on each side.
    fn best_threshold(&self, idx: &mut [usize], feature: usize, parent: f64, pos_total: usize) -> Option<Candidate> {
        idx.sort_by(|&a, &b| self.value(a, feature).total_cmp(&self.value(b, feature)));
        let n = idx.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        let mut left_pos = 0;
        for k in 1..n {
            if self.label(idx[k - 1]) {
                left_pos += 1;
            }
            let lo = self.value(idx[k - 1], feature);
            let hi = self.value(idx[k], feature);
            if lo == hi || k < min_leaf || n - k < min_leaf {
                continue;
            }
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let (nl, nr) = (k as f64, (n - k) as f64);
            let right_pos = pos_total - left_pos;
            let gain = parent
                - nl / n as f64 * entropy(k - left_pos, left_pos)
                - nr / n as f64 * entropy(n - k - right_pos, right_pos);
            if best.is_none_or(|b| gain > b.gain + GAIN_TIE_EPS) {
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn best_split(&self, idx: &[usize], rng: &mut Option<Rng>) -> Option<Candidate> {
        let n_features = self.data.n_features();
        let pos = idx.iter().filter(|&&i| self.label(i)).count();
        let parent = entropy(idx.len() - pos, pos);
        let mut scratch = idx.to_vec();

        let (mut first, rest): (Vec<usize>, Vec<usize>) = match (self.feature_subset, rng.as_mut()) {
            (Some(m), Some(r)) if m < n_features => {
                let mut order: Vec<usize> = (0..n_features).collect();
                order.shuffle(r);
                let rest = order.split_off(m);
                (order, rest)
            }
            _ => ((0..n_features).collect(), Vec::new()),
        };
        first.sort_unstable();

        let mut best: Option<Candidate> = None;
        for &f in &first {
            if let Some(c) = self.best_threshold(&mut scratch, f, parent, pos) {
                if best.is_none_or(|b| c.gain > b.gain + GAIN_TIE_EPS) {
                    best = Some(c);
                }
            }
        }
        if best.is_none() {
            // none of the sampled features can split this node: keep drawing
            best = rest
                .iter()
                .find_map(|&f| self.best_threshold(&mut scratch, f, parent, pos));
        }
        best
    }

    fn grow(&self, idx: &[usize], depth: usize, rng: &mut Option<Rng>) -> Node {
        let pos = idx.iter().filter(|&&i| self.label(i)).count();
        let neg = idx.len() - pos;
        let pure = pos == 0 || neg == 0;
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.cfg.min_samples_leaf {
            return Node::leaf(neg, pos);
        }
        let Some(split) = self.best_split(idx, rng) else {
            return Node::leaf(neg, pos);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.value(i, split.feature) <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1, rng)),
            right: Box::new(self.grow(&right, depth + 1, rng)),
        }
    }
}

/// Greedy top-down induction maximizing information gain over midpoint
/// thresholds. Gain ties go to the lowest feature index, then the lowest
/// threshold.
pub fn train_tree(train: &Dataset, cfg: &TreeConfig) -> Result<DecisionTree, ModelError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let idx: Vec<usize> = (0..train.len()).collect();
    let builder = Builder {
        data: train,
        cfg: *cfg,
        feature_subset: None,
    };
    Ok(DecisionTree {
        n_features: train.n_features(),
        root: builder.grow(&idx, 0, &mut None),
    })
}

pub fn predict_tree_proba(tree: &DecisionTree, features: &[f64]) -> Result<f64, DimensionMismatch> {
    tree.predict_proba(features)
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features drawn per split.
    pub feature_subset: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeConfig,
}

impl ForestConfig {
    /// 100 unpruned trees, `floor(sqrt(n_features))` features per split.
    pub fn for_features(n_features: usize, seed: u64) -> Self {
        Self {
            n_trees: 100,
            feature_subset: ((n_features as f64).sqrt().floor() as usize).max(1),
            bootstrap: true,
            seed,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub feature_subset: usize,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Mean of the member trees' positive probabilities.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        DimensionMismatch::check(self.n_features, features.len())?;
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict_proba(features)?;
        }
        Ok(sum / self.trees.len() as f64)
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        RandomForest::predict_proba(self, features)
    }
}

/// Bagged trees with per-split feature sampling. Tree `i` uses the seed
/// derived from `(cfg.seed, i)`, so trees can be grown in any order.
pub fn train_forest_with(train: &Dataset, cfg: &ForestConfig) -> Result<RandomForest, ModelError> {
    cfg.tree.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let n_features = train.n_features();
    if cfg.n_trees == 0 {
        return Err(ModelError::Config("n_trees must be at least 1".into()));
    }
    if cfg.feature_subset == 0 || cfg.feature_subset > n_features {
        return Err(ModelError::Config(format!(
            "feature_subset must be in 1..={n_features}, got {}",
            cfg.feature_subset
        )));
    }
    let seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|i| rng::derive_seed(cfg.seed, i)).collect();
    let builder = Builder {
        data: train,
        cfg: cfg.tree,
        feature_subset: Some(cfg.feature_subset),
    };
    let n = train.len();
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            let mut r = rng::seeded(seed);
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut r = Some(r);
            DecisionTree {
                n_features,
                root: builder.grow(&idx, 0, &mut r),
            }
        })
        .collect();
    Ok(RandomForest {
        n_features,
        feature_subset: cfg.feature_subset,
        tree_seeds: seeds,
        trees,
    })
}

pub fn train_forest(
    train: &Dataset,
    n_trees: usize,
    feature_subset: usize,
    seed: u64,
    cfg: &TreeConfig,
) -> Result<RandomForest, ModelError> {
    train_forest_with(
        train,
        &ForestConfig {
            n_trees,
            feature_subset,
            bootstrap: true,
            seed,
            tree: *cfg,
        },
    )
}

pub fn predict_forest_proba(forest: &RandomForest, features: &[f64]) -> Result<f64, DimensionMismatch> {
    forest.predict_proba(features)
}

// ---------------------------------------------------------------------------
// Naive Bayes
// ---------------------------------------------------------------------------

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// How features that only take the values 0 and 1 are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryFeatures {
    #[default]
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Likelihood {
    Gaussian { mean: f64, variance: f64 },
    Bernoulli { p_one: f64 },
}

impl Likelihood {
    fn log_density(&self, x: f64) -> f64 {
        match *self {
            Likelihood::Gaussian { mean, variance } => {
                let d = x - mean;
                -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
            }
            Likelihood::Bernoulli { p_one } => x * p_one.ln() + (1.0 - x) * (1.0 - p_one).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub prior: f64,
    pub features: Vec<Likelihood>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub negative: ClassModel,
    pub positive: ClassModel,
}

impl NaiveBayesModel {
    fn log_joint(class: &ClassModel, x: &[f64]) -> f64 {
        class.prior.ln()
            + class
                .features
                .iter()
                .zip(x)
                .map(|(l, &v)| l.log_density(v))
                .sum::<f64>()
    }

    /// `(P(negative | x), P(positive | x))`.
    pub fn posteriors(&self, features: &[f64]) -> Result<(f64, f64), DimensionMismatch> {
        DimensionMismatch::check(self.positive.features.len(), features.len())?;
        let lp = Self::log_joint(&self.positive, features);
        let ln = Self::log_joint(&self.negative, features);
        let m = lp.max(ln);
        let (ep, en) = ((lp - m).exp(), (ln - m).exp());
        let pos = ep / (ep + en);
        Ok((1.0 - pos, pos))
    }
}

impl Classifier for NaiveBayesModel {
    fn n_features(&self) -> usize {
        self.positive.features.len()
    }

    fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        self.posteriors(features).map(|(_, p)| p)
    }
}

fn fit_class(data: &Dataset, label: Label, binary: &[bool], prior: f64) -> ClassModel {
    let rows: Vec<&[f64]> = data
        .samples()
        .iter()
        .filter(|s| s.label == label)
        .map(|s| s.features.as_slice())
        .collect();
    let n = rows.len() as f64;
    let features = (0..data.n_features())
        .map(|f| {
            if binary[f] {
                let ones = rows.iter().filter(|r| r[f] == 1.0).count() as f64;
                return Likelihood::Bernoulli {
                    p_one: (ones + 1.0) / (n + 2.0),
                };
            }
            let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let variance = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
            Likelihood::Gaussian {
                mean,
                variance: variance.max(VARIANCE_FLOOR),
            }
        })
        .collect();
    ClassModel { prior, features }
}

pub fn train_nb_with(train: &Dataset, binary_features: BinaryFeatures) -> Result<NaiveBayesModel, ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let (pos, neg) = crate::dataset::class_counts(train);
    if pos == 0 {
        return Err(ModelError::MissingClass(Label::Positive));
    }
    if neg == 0 {
        return Err(ModelError::MissingClass(Label::Negative));
    }
    let binary: Vec<bool> = (0..train.n_features())
        .map(|f| {
            binary_features == BinaryFeatures::Bernoulli
                && train
                    .samples()
                    .iter()
                    .all(|s| s.features[f] == 0.0 || s.features[f] == 1.0)
        })
        .collect();
    let n = train.len() as f64;
    Ok(NaiveBayesModel {
        negative: fit_class(train, Label::Negative, &binary, neg as f64 / n),
        positive: fit_class(train, Label::Positive, &binary, pos as f64 / n),
    })
}

/// Class priors from frequencies; per-class Gaussian mean and (maximum
/// likelihood) variance for every feature, variance floored at 1e-9.
pub fn train_nb(train: &Dataset) -> Result<NaiveBayesModel, ModelError> {
    train_nb_with(train, BinaryFeatures::Gaussian)
}

pub fn predict_nb_proba(model: &NaiveBayesModel, features: &[f64]) -> Result<f64, DimensionMismatch> {
    model.predict_proba(features)
}
