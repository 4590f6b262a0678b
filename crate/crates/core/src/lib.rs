//! Heart-attack classification toolkit.
//!
//! The centrepiece is a feedforward network whose weights and biases are
//! searched by a particle swarm ([`pso::train_psonn`]). Four baselines
//! (decision tree, random forest, backpropagation network, Gaussian naive
//! Bayes) share the same data pipeline, and every model is scored by a
//! Weka-compatible evaluation engine ([`metrics`]).
//!
//! Module map:
//!
//! - [`dataset`]: CSV loading, categorical encoding, min-max normalization, holdout splits.
//! - [`neural_net`]: topology, flat parameter layout, forward pass, loss, gradient, backprop training.
//! - [`pso`]: general particle swarm optimizer and the PSONN trainer.
//! - [`baselines`]: decision tree, random forest, naive Bayes.
//! - [`metrics`]: confusion matrix, kappa, MCC, probabilistic errors, ROC/PRC areas, text report.
//! - [`runner`]: experiment configs, end-to-end pipelines, epoch sweeps, model comparison.

pub mod baselines;
pub mod dataset;
pub mod metrics;
pub mod neural_net;
pub mod pso;
pub mod rng;
pub mod runner;

pub use dataset::{Dataset, Label, Sample};
pub use neural_net::{Network, ParamVector, Topology};
pub use pso::{OptimizeResult, SwarmConfig};

/// Anything that yields a probability for the positive class.
pub trait Classifier {
    /// Number of input features the model expects.
    fn n_features(&self) -> usize;

    /// Probability that `features` belongs to the positive class.
    fn predict_proba(&self, features: &[f64]) -> Result<f64, DimensionMismatch>;
}

/// Feature vector length did not match the model input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("expected {expected} features, got {got}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

impl DimensionMismatch {
    pub(crate) fn check(expected: usize, got: usize) -> Result<(), Self> {
        if expected == got {
            Ok(())
        } else {
            Err(Self { expected, got })
        }
    }
}
