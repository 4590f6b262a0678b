//! Global-best particle swarm optimizer (minimization) and the PSONN
//! trainer built on it.
//!
//! Each iteration updates every particle from the previous iteration's
//! global best (synchronous update):
//!
//! ```text
//! v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x)     r1, r2 ~ U[0,1] per component
//! v <- clamp(v, -vmax, vmax)
//! x <- clamp(x + v, low, high)
//! ```
//!
//! then evaluates all particles and moves personal and global bests on
//! strict improvement only. Random numbers are drawn on the calling thread
//! in particle order, and the best-update pass walks particles in index
//! order, so evaluating fitness in parallel yields bit-identical results.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::neural_net::{NetError, Network, NetworkView, ParamVector, Topology};
use crate::rng::{self, Rng};
use crate::DimensionMismatch;

#[derive(Debug, thiserror::Error)]
pub enum PsoError {
    #[error("invalid swarm config: {0}")]
    Config(String),
    #[error("search dimension must be at least 1")]
    ZeroDimension,
    #[error("particle {particle} produced non-finite fitness {value}")]
    NonFiniteFitness { particle: usize, value: f64 },
    #[error(transparent)]
    Network(#[from] NetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub position_low: f64,
    pub position_high: f64,
    pub vmax: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            position_low: -10.0,
            position_high: 10.0,
            vmax: 4.0,
            iterations: 700,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), PsoError> {
        let bad = |m: String| Err(PsoError::Config(m));
        if self.swarm_size == 0 {
            return bad("swarm_size must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.position_low.is_finite() && self.position_high.is_finite()) || self.position_low >= self.position_high
        {
            return bad(format!(
                "position bounds must satisfy low < high, got [{}, {}]",
                self.position_low, self.position_high
            ));
        }
        if !(self.vmax.is_finite() && self.vmax > 0.0) {
            return bad(format!("vmax must be positive, got {}", self.vmax));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

/// How fitness values within one iteration are computed. Both schedules
/// produce identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    Sequential,
    #[default]
    Parallel,
}

/// Function to minimize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: Vec<f64>,
    pub gbest_fitness: f64,
    pub iteration: usize,
    rng: Rng,
}

impl PartialEq for SwarmState {
    fn eq(&self, other: &Self) -> bool {
        self.particles == other.particles
            && self.gbest_position == other.gbest_position
            && self.gbest_fitness.to_bits() == other.gbest_fitness.to_bits()
            && self.iteration == other.iteration
            && self.rng == other.rng
    }
}

fn evaluate_all<F: Objective + ?Sized>(
    positions: &[&[f64]],
    fitness: &F,
    schedule: Schedule,
) -> Result<Vec<f64>, PsoError> {
    let values: Vec<f64> = match schedule {
        Schedule::Sequential => positions.iter().map(|x| fitness.evaluate(x)).collect(),
        Schedule::Parallel => positions.par_iter().map(|x| fitness.evaluate(x)).collect(),
    };
    if let Some(particle) = values.iter().position(|v| !v.is_finite()) {
        return Err(PsoError::NonFiniteFitness {
            particle,
            value: values[particle],
        });
    }
    Ok(values)
}

pub fn init_swarm<F: Objective + ?Sized>(cfg: &SwarmConfig, dim: usize, fitness: &F) -> Result<SwarmState, PsoError> {
    init_swarm_with(cfg, dim, fitness, Schedule::default())
}

/// Positions uniform in the bounds, velocities uniform in `[-vmax, vmax]`,
/// personal bests at the start positions.
pub fn init_swarm_with<F: Objective + ?Sized>(
    cfg: &SwarmConfig,
    dim: usize,
    fitness: &F,
    schedule: Schedule,
) -> Result<SwarmState, PsoError> {
    cfg.validate()?;
    if dim == 0 {
        return Err(PsoError::ZeroDimension);
    }
    let mut rng = rng::seeded(cfg.seed);
    let mut particles = Vec::with_capacity(cfg.swarm_size);
    for _ in 0..cfg.swarm_size {
        let position: Vec<f64> = (0..dim)
            .map(|_| rng.gen_range(cfg.position_low..=cfg.position_high))
            .collect();
        let velocity: Vec<f64> = (0..dim).map(|_| rng.gen_range(-cfg.vmax..=cfg.vmax)).collect();
        particles.push(Particle {
            pbest_position: position.clone(),
            position,
            velocity,
            pbest_fitness: f64::INFINITY,
        });
    }
    let positions: Vec<&[f64]> = particles.iter().map(|p| p.position.as_slice()).collect();
    let values = evaluate_all(&positions, fitness, schedule)?;

    let mut best = 0;
    for (i, (p, v)) in particles.iter_mut().zip(&values).enumerate() {
        p.pbest_fitness = *v;
        if *v < values[best] {
            best = i;
        }
    }
    Ok(SwarmState {
        gbest_position: particles[best].pbest_position.clone(),
        gbest_fitness: values[best],
        particles,
        iteration: 0,
        rng,
    })
}

pub fn step<F: Objective + ?Sized>(state: SwarmState, cfg: &SwarmConfig, fitness: &F) -> Result<SwarmState, PsoError> {
    step_with(state, cfg, fitness, Schedule::default())
}

/// One synchronous velocity/position update of the whole swarm.
#[allow(clippy::needless_range_loop)] // `d` walks five parallel vectors
pub fn step_with<F: Objective + ?Sized>(
    mut state: SwarmState,
    cfg: &SwarmConfig,
    fitness: &F,
    schedule: Schedule,
) -> Result<SwarmState, PsoError> {
    let SwarmState {
        particles,
        gbest_position,
        rng,
        ..
    } = &mut state;
    for p in particles.iter_mut() {
        for d in 0..p.position.len() {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let x = p.position[d];
            let v = cfg.inertia * p.velocity[d]
                + cfg.cognitive * r1 * (p.pbest_position[d] - x)
                + cfg.social * r2 * (gbest_position[d] - x);
            let v = v.clamp(-cfg.vmax, cfg.vmax);
            p.velocity[d] = v;
            p.position[d] = (x + v).clamp(cfg.position_low, cfg.position_high);
        }
    }

    let positions: Vec<&[f64]> = state.particles.iter().map(|p| p.position.as_slice()).collect();
    let values = evaluate_all(&positions, fitness, schedule)?;

    for (p, &f) in state.particles.iter_mut().zip(&values) {
        if f < p.pbest_fitness {
            p.pbest_fitness = f;
            p.pbest_position.clone_from(&p.position);
        }
    }
    for p in &state.particles {
        if p.pbest_fitness < state.gbest_fitness {
            state.gbest_fitness = p.pbest_fitness;
            state.gbest_position.clone_from(&p.pbest_position);
        }
    }
    state.iteration += 1;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub config: SwarmConfig,
    pub dim: usize,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Global best after initialization, then after each iteration.
    pub fitness_history: Vec<f64>,
}

pub fn optimize<F: Objective + ?Sized>(cfg: &SwarmConfig, dim: usize, fitness: &F) -> Result<OptimizeResult, PsoError> {
    optimize_with(cfg, dim, fitness, Schedule::default())
}

pub fn optimize_with<F: Objective + ?Sized>(
    cfg: &SwarmConfig,
    dim: usize,
    fitness: &F,
    schedule: Schedule,
) -> Result<OptimizeResult, PsoError> {
    let mut state = init_swarm_with(cfg, dim, fitness, schedule)?;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(state.gbest_fitness);
    for _ in 0..cfg.iterations {
        state = step_with(state, cfg, fitness, schedule)?;
        history.push(state.gbest_fitness);
    }
    Ok(OptimizeResult {
        config: *cfg,
        dim,
        best_position: state.gbest_position,
        best_fitness: state.gbest_fitness,
        fitness_history: history,
    })
}

/// What the swarm minimizes when training a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessKind {
    /// Training-set mean squared error.
    #[default]
    Mse,
    /// Fraction of misclassified training samples.
    Misclassification,
}

#[derive(Debug, Clone)]
pub struct PsonnOutcome {
    pub network: Network,
    pub optimization: OptimizeResult,
}

/// Search the flattened weights and biases of `topology` with the swarm,
/// minimizing training MSE, and return the decoded best network.
pub fn train_psonn(topology: &Topology, train: &Dataset, cfg: &SwarmConfig) -> Result<Network, PsoError> {
    Ok(train_psonn_with(topology, train, cfg, FitnessKind::Mse, Schedule::default())?.network)
}

pub fn train_psonn_with(
    topology: &Topology,
    train: &Dataset,
    cfg: &SwarmConfig,
    fitness: FitnessKind,
    schedule: Schedule,
) -> Result<PsonnOutcome, PsoError> {
    if train.is_empty() {
        return Err(NetError::EmptyDataset.into());
    }
    DimensionMismatch::check(topology.n_inputs(), train.n_features()).map_err(NetError::from)?;
    let objective = |x: &[f64]| -> f64 {
        let view = NetworkView::new(topology, x).expect("particle dimension equals parameter count");
        let value = match fitness {
            FitnessKind::Mse => view.mse(train),
            FitnessKind::Misclassification => view.error_rate(train),
        };
        value.expect("training set checked above")
    };
    let optimization = optimize_with(cfg, topology.param_count(), &objective, schedule)?;
    let network = Network::new(topology.clone(), ParamVector(optimization.best_position.clone()))?;
    Ok(PsonnOutcome { network, optimization })
}
