#![allow(dead_code)]

use std::path::PathBuf;

use psonn_core::dataset::{Dataset, Label, Sample};
use psonn_core::neural_net::{gradient, Network, ParamVector, Topology};
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Two Gaussian blobs in `[0,1]^2`, centred at (0.25, 0.25) and (0.75, 0.75)
/// with spread `sd`, alternating labels. Points are clamped to the unit
/// square.
pub fn blobs(n: usize, sd: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let samples = (0..n)
        .map(|i| {
            let positive = i % 2 == 1;
            let c = if positive { 0.75 } else { 0.25 };
            let x = (0..2).map(|_| (c + sd * normal(&mut r)).clamp(0.0, 1.0)).collect();
            Sample::new(x, Label::from_bool(positive))
        })
        .collect();
    Dataset::from_samples(2, samples).unwrap()
}

pub fn xor() -> Dataset {
    let rows = [
        ([0.0, 0.0], false),
        ([0.0, 1.0], true),
        ([1.0, 0.0], true),
        ([1.0, 1.0], false),
    ];
    Dataset::from_samples(
        2,
        rows.iter()
            .map(|(x, y)| Sample::new(x.to_vec(), Label::from_bool(*y)))
            .collect(),
    )
    .unwrap()
}

pub fn random_dataset(r: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let samples = (0..n)
        .map(|_| {
            let x = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
            Sample::new(x, Label::from_bool(r.gen_bool(0.5)))
        })
        .collect();
    Dataset::from_samples(d, samples).unwrap()
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Forward pass written as explicit nested loops over a weight tensor
/// `w[l][j][i]` and bias `b[l][j]` built from the flat layout.
pub fn oracle_forward(sizes: &[usize], params: &[f64], x: &[f64]) -> f64 {
    let n_w: usize = sizes.windows(2).map(|p| p[0] * p[1]).sum();
    let mut w_pos = 0;
    let mut b_pos = n_w;
    let mut a = x.to_vec();
    for l in 0..sizes.len() - 1 {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let mut next = vec![0.0; n_out];
        for j in 0..n_out {
            let mut z = params[b_pos + j];
            for i in 0..n_in {
                z += params[w_pos + j * n_in + i] * a[i];
            }
            next[j] = 1.0 / (1.0 + (-z).exp());
        }
        w_pos += n_in * n_out;
        b_pos += n_out;
        a = next;
    }
    a[0]
}

pub fn oracle_mse(sizes: &[usize], params: &[f64], data: &Dataset) -> f64 {
    let mut sum = 0.0;
    for s in data.samples() {
        let e = oracle_forward(sizes, params, &s.features) - s.label.target();
        sum += e * e;
    }
    sum / data.len() as f64
}

pub fn random_topology(r: &mut rand_chacha::ChaCha8Rng) -> Topology {
    let inputs = r.gen_range(1..=8);
    let hidden: Vec<usize> = (0..r.gen_range(0..=3)).map(|_| r.gen_range(1..=6)).collect();
    Topology::with_hidden(inputs, &hidden).unwrap()
}

pub fn random_network(r: &mut rand_chacha::ChaCha8Rng, topo: Topology, scale: f64) -> Network {
    let p = (0..topo.param_count()).map(|_| r.gen_range(-scale..scale)).collect();
    Network::new(topo, ParamVector(p)).unwrap()
}

/// Relative error with the denominator floored at 1e-6, so parameters whose
/// gradient is essentially zero are compared on an absolute scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst backprop-vs-central-difference error over `trials` random
/// (network, batch) pairs. The oracle is the fourth-order central stencil
/// `(8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h`.
pub fn max_gradient_error(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let topo = random_topology(&mut r);
        let net = random_network(&mut r, topo.clone(), 1.0);
        let n = r.gen_range(1..20);
        let data = random_dataset(&mut r, n, topo.n_inputs());
        let g = gradient(&net, &data).unwrap();
        let sizes = topo.layer_sizes();
        let at = |k: usize, delta: f64| {
            let mut p = net.params().0.clone();
            p[k] += delta;
            oracle_mse(sizes, &p, &data)
        };
        for k in 0..topo.param_count() {
            let fd = (8.0 * (at(k, h) - at(k, -h)) - (at(k, 2.0 * h) - at(k, -2.0 * h))) / (12.0 * h);
            worst = worst.max(rel_err(g.0[k], fd));
        }
    }
    worst
}

/// Binary entropy in bits of a positive fraction.
pub fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Every (feature, midpoint) pair scored from scratch; returns the best by
/// gain, ties to lowest feature then lowest threshold.
pub fn exhaustive_root_split(data: &Dataset) -> Option<(usize, f64, f64)> {
    let rows = data.samples();
    let n = rows.len() as f64;
    let pos = rows.iter().filter(|s| s.label.is_positive()).count() as f64;
    let parent = h(pos / n);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..data.n_features() {
        let mut values: Vec<f64> = rows.iter().map(|s| s.features[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut nl, mut pl, mut nr, mut pr) = (0.0, 0.0, 0.0, 0.0);
            for s in rows {
                let p = f64::from(u8::from(s.label.is_positive()));
                if s.features[f] <= t {
                    nl += 1.0;
                    pl += p;
                } else {
                    nr += 1.0;
                    pr += p;
                }
            }
            let gain = parent - nl / n * h(pl / nl) - nr / n * h(pr / nr);
            if best.is_none_or(|(_, _, g)| gain > g + 1e-12) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

/// Pairwise AUC: fraction of (positive, negative) pairs ordered correctly,
/// ties worth one half.
pub fn pairwise_auc(probs: &[f64], actuals: &[Label]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, a) in actuals.iter().enumerate() {
        if !a.is_positive() {
            continue;
        }
        for (j, b) in actuals.iter().enumerate() {
            if b.is_positive() {
                continue;
            }
            pairs += 1.0;
            if probs[i] > probs[j] {
                wins += 1.0;
            } else if probs[i] == probs[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Labels and hard 0/1 scores that reproduce a confusion matrix.
pub fn expand_confusion(tp: usize, fn_: usize, fp: usize, tn: usize) -> (Vec<Label>, Vec<f64>) {
    let mut actuals = Vec::new();
    let mut probs = Vec::new();
    for (count, actual, p) in [(tp, true, 1.0), (fn_, true, 0.0), (fp, false, 1.0), (tn, false, 0.0)] {
        actuals.extend(std::iter::repeat_n(Label::from_bool(actual), count));
        probs.extend(std::iter::repeat_n(p, count));
    }
    (actuals, probs)
}

/// Like [`blobs`] but rejection-sampled so every negative has `x + y < 0.9`
/// and every positive `x + y > 1.1`: linearly separable with a margin.
pub fn separable_blobs(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let positive = samples.len() % 2 == 1;
        let c = if positive { 0.75 } else { 0.25 };
        let x: Vec<f64> = (0..2).map(|_| (c + 0.1 * normal(&mut r)).clamp(0.0, 1.0)).collect();
        let s = x[0] + x[1];
        if (positive && s > 1.1) || (!positive && s < 0.9) {
            samples.push(Sample::new(x, Label::from_bool(positive)));
        }
    }
    Dataset::from_samples(2, samples).unwrap()
}
