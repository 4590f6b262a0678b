//! Fully connected sigmoid network addressed through one flat parameter
//! vector, so the same network can be driven by a swarm (which only sees a
//! point in `R^n`) or by gradient descent.
//!
//! # Parameter layout
//!
//! For layer sizes `[n0, n1, ..., nL]` the vector holds every weight matrix
//! first, then every bias vector:
//!
//! ```text
//! W1 (n1 x n0) | W2 (n2 x n1) | ... | WL | b1 (n1) | b2 (n2) | ... | bL
//! ```
//!
//! Each `Wk` is row-major with one row per output unit, so the weight from
//! input `i` to unit `j` of layer `k` sits at `offset(Wk) + j * n(k-1) + i`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{rng, Classifier, DimensionMismatch};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("parameter vector has length {got}, topology needs {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("parameter {0} is not finite")]
    NonFinite(usize),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("unsupported activation '{0}'")]
    Activation(String),
    #[error("network JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Layer widths, input first. The output layer is a single unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Topology {
    layer_sizes: Vec<usize>,
}

impl Topology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, NetError> {
        if layer_sizes.len() < 2 {
            return Err(NetError::Topology("need at least an input and an output layer".into()));
        }
        if let Some(i) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(NetError::Topology(format!("layer {i} has zero units")));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(NetError::Topology("output layer must have exactly one unit".into()));
        }
        Ok(Self { layer_sizes })
    }

    /// `inputs -> hidden... -> 1`.
    pub fn with_hidden(inputs: usize, hidden: &[usize]) -> Result<Self, NetError> {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self::new(sizes)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    fn n_weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn widest(&self) -> usize {
        *self.layer_sizes.iter().max().unwrap()
    }

    pub fn weight_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.layer_sizes[1..].iter().sum::<usize>()
    }

    /// Start of each layer's weight block and bias block.
    fn offsets(&self) -> (Vec<usize>, Vec<usize>) {
        let mut w = Vec::with_capacity(self.n_weight_layers());
        let mut b = Vec::with_capacity(self.n_weight_layers());
        let mut wo = 0;
        let mut bo = self.weight_count();
        for pair in self.layer_sizes.windows(2) {
            w.push(wo);
            b.push(bo);
            wo += pair[0] * pair[1];
            bo += pair[1];
        }
        (w, b)
    }
}

impl TryFrom<Vec<usize>> for Topology {
    type Error = NetError;
    fn try_from(v: Vec<usize>) -> Result<Self, NetError> {
        Self::new(v)
    }
}

impl From<Topology> for Vec<usize> {
    fn from(t: Topology) -> Self {
        t.layer_sizes
    }
}

/// Total number of weights and biases for `topology`.
pub fn param_count(topology: &Topology) -> usize {
    topology.param_count()
}

/// Flat weights-then-biases vector in the canonical layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Logistic function, kept strictly inside (0, 1).
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Borrowed network: a topology plus a parameter slice of matching length.
/// This is what the swarm evaluates, without copying particle positions.
#[derive(Debug, Clone, Copy)]
pub struct NetworkView<'a> {
    topology: &'a Topology,
    params: &'a [f64],
}

impl<'a> NetworkView<'a> {
    pub fn new(topology: &'a Topology, params: &'a [f64]) -> Result<Self, NetError> {
        let expected = topology.param_count();
        if params.len() != expected {
            return Err(NetError::ParamLength {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { topology, params })
    }

    /// Forward pass using caller-provided buffers (each at least as wide as
    /// the widest layer). Input length is not checked here.
    fn forward_with(&self, x: &[f64], cur: &mut Vec<f64>, next: &mut Vec<f64>) -> f64 {
        let sizes = &self.topology.layer_sizes;
        let n_w = self.topology.weight_count();
        let mut w_off = 0;
        let mut b_off = n_w;
        cur.clear();
        cur.extend_from_slice(x);
        for pair in sizes.windows(2) {
            let (n_in, n_out) = (pair[0], pair[1]);
            next.clear();
            for j in 0..n_out {
                let row = &self.params[w_off + j * n_in..w_off + (j + 1) * n_in];
                let z = row
                    .iter()
                    .zip(cur.iter())
                    .fold(self.params[b_off + j], |acc, (w, a)| acc + w * a);
                next.push(sigmoid(z));
            }
            w_off += n_in * n_out;
            b_off += n_out;
            std::mem::swap(cur, next);
        }
        cur[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, DimensionMismatch> {
        DimensionMismatch::check(self.topology.n_inputs(), x.len())?;
        let cap = self.topology.widest();
        let (mut a, mut b) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        Ok(self.forward_with(x, &mut a, &mut b))
    }

    /// Mean squared error over `data`.
    pub fn mse(&self, data: &Dataset) -> Result<f64, NetError> {
        self.reduce(data, |out, y| (out - y) * (out - y))
    }

    /// Fraction of misclassified samples at threshold 0.5.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64, NetError> {
        self.reduce(data, |out, y| if (out >= 0.5) != (y == 1.0) { 1.0 } else { 0.0 })
    }

    fn reduce(&self, data: &Dataset, per_sample: impl Fn(f64, f64) -> f64) -> Result<f64, NetError> {
        if data.is_empty() {
            return Err(NetError::EmptyDataset);
        }
        DimensionMismatch::check(self.topology.n_inputs(), data.n_features())?;
        let cap = self.topology.widest();
        let (mut a, mut b) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        let mut total = 0.0;
        for s in data.samples() {
            let out = self.forward_with(&s.features, &mut a, &mut b);
            total += per_sample(out, s.label.target());
        }
        Ok(total / data.len() as f64)
    }
}

/// Owned network with sigmoid units on every non-input layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    params: ParamVector,
}

impl Network {
    /// Same as [`unflatten`].
    pub fn new(topology: Topology, params: ParamVector) -> Result<Self, NetError> {
        NetworkView::new(&topology, &params.0)?;
        if let Some(i) = params.0.iter().position(|v| !v.is_finite()) {
            return Err(NetError::NonFinite(i));
        }
        Ok(Self { topology, params })
    }

    pub fn zeros(topology: Topology) -> Self {
        let params = ParamVector(vec![0.0; topology.param_count()]);
        Self { topology, params }
    }

    /// Uniform weights and biases in `[-scale, scale]`.
    pub fn random(topology: Topology, scale: f64, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let params = ParamVector(
            (0..topology.param_count())
                .map(|_| r.gen_range(-scale..=scale))
                .collect(),
        );
        Self { topology, params }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn view(&self) -> NetworkView<'_> {
        NetworkView {
            topology: &self.topology,
            params: &self.params.0,
        }
    }

    pub fn forward(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        self.view().forward(features)
    }

    /// 1 when `forward >= threshold`; ties go to the positive class.
    pub fn predict_label(&self, features: &[f64], threshold: f64) -> Result<u8, DimensionMismatch> {
        Ok(u8::from(self.forward(features)? >= threshold))
    }

    pub fn to_json(&self, threshold: f64) -> Result<String, NetError> {
        let doc = NetworkDocument {
            topology: self.topology.clone(),
            params: self.params.clone(),
            activation: "sigmoid".into(),
            threshold,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Inverse of [`Network::to_json`]; returns the network and its threshold.
    pub fn from_json(text: &str) -> Result<(Self, f64), NetError> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        doc.into_network()
    }
}

/// Persisted form of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub topology: Topology,
    pub params: ParamVector,
    pub activation: String,
    pub threshold: f64,
}

impl NetworkDocument {
    pub fn into_network(self) -> Result<(Network, f64), NetError> {
        if self.activation != "sigmoid" {
            return Err(NetError::Activation(self.activation));
        }
        Ok((Network::new(self.topology, self.params)?, self.threshold))
    }
}

impl From<&Network> for NetworkDocument {
    fn from(n: &Network) -> Self {
        Self {
            topology: n.topology.clone(),
            params: n.params.clone(),
            activation: "sigmoid".into(),
            threshold: 0.5,
        }
    }
}

impl Classifier for Network {
    fn n_features(&self) -> usize {
        self.topology.n_inputs()
    }

    fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch> {
        self.forward(features)
    }
}

pub fn flatten(network: &Network) -> ParamVector {
    network.params.clone()
}

pub fn unflatten(topology: &Topology, v: &ParamVector) -> Result<Network, NetError> {
    Network::new(topology.clone(), v.clone())
}

pub fn mse_loss(network: &Network, data: &Dataset) -> Result<f64, NetError> {
    network.view().mse(data)
}

/// Loss and its exact gradient in one reverse-mode pass.
pub fn loss_and_gradient(network: &Network, data: &Dataset) -> Result<(f64, ParamVector), NetError> {
    if data.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let topo = &network.topology;
    DimensionMismatch::check(topo.n_inputs(), data.n_features())?;
    let params = &network.params.0;
    let sizes = &topo.layer_sizes;
    let (w_off, b_off) = topo.offsets();
    let layers = topo.n_weight_layers();
    let n = data.len() as f64;

    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    // acts[k] holds the activations of layer k (acts[0] is the input).
    let mut acts: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    let mut delta: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();

    for s in data.samples() {
        acts[0].copy_from_slice(&s.features);
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let (lower, upper) = acts.split_at_mut(l + 1);
            let input = &lower[l];
            for (j, out) in upper[0].iter_mut().enumerate().take(n_out) {
                let row = &params[w_off[l] + j * n_in..w_off[l] + (j + 1) * n_in];
                let z = row
                    .iter()
                    .zip(input)
                    .fold(params[b_off[l] + j], |acc, (w, a)| acc + w * a);
                *out = sigmoid(z);
            }
        }
        let out = acts[layers][0];
        let err = out - s.label.target();
        loss += err * err;
        delta[layers][0] = 2.0 * err / n * out * (1.0 - out);

        for l in (0..layers).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            for j in 0..n_out {
                let d = delta[l + 1][j];
                grad[b_off[l] + j] += d;
                let base = w_off[l] + j * n_in;
                for i in 0..n_in {
                    grad[base + i] += d * acts[l][i];
                }
            }
            if l > 0 {
                for i in 0..n_in {
                    let back: f64 = (0..n_out)
                        .map(|j| params[w_off[l] + j * n_in + i] * delta[l + 1][j])
                        .sum();
                    let a = acts[l][i];
                    delta[l][i] = back * a * (1.0 - a);
                }
            }
        }
    }
    Ok((loss / n, ParamVector(grad)))
}

/// Gradient of [`mse_loss`] with respect to every parameter.
pub fn gradient(network: &Network, data: &Dataset) -> Result<ParamVector, NetError> {
    loss_and_gradient(network, data).map(|(_, g)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackpropConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl BackpropConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NetError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(NetError::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for BackpropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.3,
            epochs: 500,
            seed: 0,
        }
    }
}

/// Initial weight range for backprop training.
pub const INIT_SCALE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct BackpropOutcome {
    pub network: Network,
    /// Training loss before each epoch, plus the final loss (`epochs + 1` entries).
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on the mean squared error.
pub fn backprop_train(topology: &Topology, train: &Dataset, cfg: &BackpropConfig) -> Result<BackpropOutcome, NetError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    DimensionMismatch::check(topology.n_inputs(), train.n_features())?;
    let mut net = Network::random(topology.clone(), INIT_SCALE, cfg.seed);
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient(&net, train)?;
        loss_history.push(loss);
        for (p, g) in net.params.0.iter_mut().zip(&grad.0) {
            *p -= cfg.learning_rate * g;
        }
    }
    loss_history.push(mse_loss(&net, train)?);
    Ok(BackpropOutcome {
        network: net,
        loss_history,
    })
}
