mod common;

use common::{blobs, median, sphere};
use proptest::prelude::*;
use psonn_core::neural_net::Topology;
use psonn_core::pso::{self, optimize, optimize_with, FitnessKind, Schedule, SwarmConfig};

fn sphere_cfg(seed: u64) -> SwarmConfig {
    SwarmConfig {
        swarm_size: 20,
        iterations: 200,
        seed,
        ..SwarmConfig::default()
    }
}

#[test]
fn sphere_converges_for_most_seeds() {
    let mut hits = 0;
    for seed in 0..20 {
        let r = optimize(&sphere_cfg(seed), 2, &sphere).unwrap();
        assert_eq!(r.fitness_history.len(), 201);
        assert!(r.fitness_history.windows(2).all(|w| w[1] <= w[0]));
        hits += usize::from(r.best_fitness < 1e-4);
    }
    assert!(hits >= 18, "{hits}/20 seeds below 1e-4");
}

#[test]
fn sphere_median_drops_four_orders_of_magnitude() {
    let mut ratios = Vec::new();
    for seed in 100..120 {
        let r = optimize(&sphere_cfg(seed), 2, &sphere).unwrap();
        ratios.push(r.best_fitness / r.fitness_history[0]);
    }
    let m = median(ratios);
    assert!(m <= 1e-4, "median ratio {m:e}");
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let cfg = SwarmConfig {
        swarm_size: 15,
        iterations: 50,
        seed: 9,
        ..SwarmConfig::default()
    };
    let f = |x: &[f64]| {
        x.iter()
            .enumerate()
            .map(|(i, v)| (i as f64 + 1.0) * (v - 1.0).powi(2))
            .sum::<f64>()
    };
    let a = optimize_with(&cfg, 5, &f, Schedule::Sequential).unwrap();
    let b = optimize_with(&cfg, 5, &f, Schedule::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn psonn_separates_blobs() {
    let train = blobs(100, 0.08, 3);
    let topo = Topology::with_hidden(2, &[5, 5]).unwrap();
    let cfg = SwarmConfig {
        swarm_size: 30,
        iterations: 200,
        seed: 5,
        ..SwarmConfig::default()
    };
    let out = pso::train_psonn_with(&topo, &train, &cfg, FitnessKind::Mse, Schedule::Parallel).unwrap();
    for s in train.samples() {
        assert_eq!(out.network.predict_label(&s.features, 0.5).unwrap(), s.label.as_u8());
    }
    let h = &out.optimization.fitness_history;
    assert_eq!(h.len(), 201);
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn misclassification_fitness_is_supported() {
    let train = blobs(60, 0.08, 4);
    let topo = Topology::with_hidden(2, &[3]).unwrap();
    let cfg = SwarmConfig {
        swarm_size: 20,
        iterations: 60,
        seed: 1,
        ..SwarmConfig::default()
    };
    let out = pso::train_psonn_with(
        &topo,
        &train,
        &cfg,
        FitnessKind::Misclassification,
        Schedule::Sequential,
    )
    .unwrap();
    // error rates are multiples of 1/60
    for v in &out.optimization.fitness_history {
        let k = v * 60.0;
        assert!((k - k.round()).abs() < 1e-9);
    }
}

fn small_cfg() -> impl Strategy<Value = (SwarmConfig, usize)> {
    (
        1usize..12,
        0.0f64..1.0,
        0.0f64..2.5,
        0.0f64..2.5,
        0.5f64..20.0,
        0.1f64..10.0,
        1usize..25,
        any::<u64>(),
        1usize..5,
    )
        .prop_map(
            |(swarm_size, inertia, cognitive, social, half, vmax, iterations, seed, dim)| {
                (
                    SwarmConfig {
                        swarm_size,
                        inertia,
                        cognitive,
                        social,
                        position_low: -half,
                        position_high: half,
                        vmax,
                        iterations,
                        seed,
                    },
                    dim,
                )
            },
        )
}

fn rastrigin(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
        .sum()
}

proptest! {
    #[test]
    fn positions_and_velocities_stay_bounded((cfg, dim) in small_cfg()) {
        let mut state = pso::init_swarm(&cfg, dim, &rastrigin).unwrap();
        for _ in 0..cfg.iterations {
            state = pso::step(state, &cfg, &rastrigin).unwrap();
            for p in &state.particles {
                for d in 0..dim {
                    prop_assert!(p.position[d] >= cfg.position_low && p.position[d] <= cfg.position_high);
                    prop_assert!(p.velocity[d].abs() <= cfg.vmax);
                }
            }
        }
    }

    #[test]
    fn gbest_is_minimum_of_pbests((cfg, dim) in small_cfg()) {
        let mut state = pso::init_swarm(&cfg, dim, &rastrigin).unwrap();
        let mut prev = state.gbest_fitness;
        for _ in 0..cfg.iterations {
            state = pso::step(state, &cfg, &rastrigin).unwrap();
            let min = state.particles.iter().map(|p| p.pbest_fitness).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(state.gbest_fitness, min);
            prop_assert!(state.gbest_fitness <= prev);
            prop_assert_eq!(rastrigin(&state.gbest_position), state.gbest_fitness);
            for p in &state.particles {
                prop_assert_eq!(rastrigin(&p.pbest_position), p.pbest_fitness);
            }
            prev = state.gbest_fitness;
        }
    }

    #[test]
    fn history_is_monotone_and_sized((cfg, dim) in small_cfg()) {
        let r = optimize(&cfg, dim, &rastrigin).unwrap();
        prop_assert_eq!(r.fitness_history.len(), cfg.iterations + 1);
        prop_assert!(r.fitness_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*r.fitness_history.last().unwrap(), r.best_fitness);
    }

    #[test]
    fn same_seed_same_run((cfg, dim) in small_cfg()) {
        let a = optimize(&cfg, dim, &rastrigin).unwrap();
        let b = optimize(&cfg, dim, &rastrigin).unwrap();
        prop_assert_eq!(a, b);
    }
}
