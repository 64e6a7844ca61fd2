//! Independent oracles for the integration and acceptance tests.
//!
//! Nothing here calls into the library's forward pass, backpropagation or
//! loss code: the MLP is re-evaluated from the raw parameter arrays.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rgc_core::model::{Architecture, ModelParams};
use rgc_core::ProbVector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random architecture with one or two tanh layers.
pub fn random_arch<R: Rng>(rng: &mut R, max_depth: usize) -> Architecture {
    let depth = rng.random_range(1..=max_depth);
    Architecture {
        input_dim: rng.random_range(2..=6),
        hidden: (0..depth).map(|_| rng.random_range(2..=7)).collect(),
        classes: rng.random_range(2..=5),
    }
}

/// Glorot-initialised parameters with biases and weights rescaled so that
/// instances cover both near-linear and saturated regimes.
pub fn random_params<R: Rng>(arch: &Architecture, rng: &mut R) -> ModelParams {
    let mut params = ModelParams::init(arch, rng).expect("valid architecture");
    let scale = rng.random_range(0.5..2.0);
    let mut flat = params.flatten();
    for v in &mut flat {
        *v = *v * scale + rng.random_range(-0.1..0.1);
    }
    params.assign_flat(&flat).expect("same length");
    params
}

pub fn random_vec<R: Rng>(n: usize, spread: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-spread..spread)).collect()
}

pub fn random_prob<R: Rng>(k: usize, rng: &mut R) -> ProbVector {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(2) + 1e-6).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|v| v / total).collect()).expect("normalised")
}

/// Either a one-hot or a dense random target.
pub fn random_target<R: Rng>(k: usize, rng: &mut R) -> ProbVector {
    if rng.random_bool(0.5) {
        ProbVector::one_hot(k, rng.random_range(0..k)).expect("class in range")
    } else {
        random_prob(k, rng)
    }
}

/// Oracle forward pass: returns every layer's activation (input first) and
/// the logits.
pub fn oracle_forward(params: &ModelParams, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut acts = vec![x.to_vec()];
    for layer in &params.encoder {
        let prev = acts.last().unwrap();
        let (rows, cols) = layer.weight.shape();
        let mut out = vec![0.0; rows];
        for (r, o) in out.iter_mut().enumerate() {
            let mut sum = layer.bias[r];
            for c in 0..cols {
                sum += layer.weight.get(r, c) * prev[c];
            }
            *o = sum.tanh();
        }
        acts.push(out);
    }
    let h = acts.last().unwrap();
    let (k, d) = params.head.shape();
    let z = (0..k)
        .map(|r| (0..d).map(|c| params.head.get(r, c) * h[c]).sum())
        .collect();
    (acts, z)
}

pub fn oracle_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Soft-target cross-entropy via log-sum-exp: `lse(z) - <t, z>`.
pub fn oracle_loss(params: &ModelParams, x: &[f64], target: &ProbVector) -> f64 {
    let (_, z) = oracle_forward(params, x);
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - target
        .as_slice()
        .iter()
        .zip(&z)
        .map(|(t, v)| t * v)
        .sum::<f64>()
}

/// Oracle backpropagation of soft-target cross-entropy. Returns the encoder
/// gradient flattened layer by layer (weight row-major, then bias) and the
/// head gradient row-major.
pub fn oracle_grad(params: &ModelParams, x: &[f64], target: &ProbVector) -> (Vec<f64>, Vec<f64>) {
    let (acts, z) = oracle_forward(params, x);
    let p = oracle_softmax(&z);
    let delta: Vec<f64> = p
        .iter()
        .zip(target.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let h = acts.last().unwrap();
    let (k, d) = params.head.shape();
    let mut head = Vec::with_capacity(k * d);
    for dk in &delta {
        for hd in h {
            head.push(dk * hd);
        }
    }
    // upstream gradient with respect to the encoder output
    let mut up: Vec<f64> = (0..d)
        .map(|c| (0..k).map(|r| params.head.get(r, c) * delta[r]).sum())
        .collect();
    let mut layers: Vec<Vec<f64>> = Vec::new();
    for l in (0..params.encoder.len()).rev() {
        let layer = &params.encoder[l];
        let (rows, cols) = layer.weight.shape();
        let out = &acts[l + 1];
        let inp = &acts[l];
        let dpre: Vec<f64> = (0..rows).map(|r| up[r] * (1.0 - out[r] * out[r])).collect();
        let mut g = Vec::with_capacity(rows * cols + rows);
        for r in 0..rows {
            for c in 0..cols {
                g.push(dpre[r] * inp[c]);
            }
        }
        g.extend_from_slice(&dpre);
        layers.push(g);
        up = (0..cols)
            .map(|c| (0..rows).map(|r| layer.weight.get(r, c) * dpre[r]).sum())
            .collect();
    }
    layers.reverse();
    (layers.concat(), head)
}

/// Central finite differences of the oracle loss over every parameter, in
/// `ModelParams::flatten` order.
pub fn finite_difference_grad(
    params: &ModelParams,
    x: &[f64],
    target: &ProbVector,
    step: f64,
) -> Vec<f64> {
    let base = params.flatten();
    let mut probe = params.clone();
    let mut flat = base.clone();
    (0..base.len())
        .map(|i| {
            flat[i] = base[i] + step;
            probe.assign_flat(&flat).unwrap();
            let plus = oracle_loss(&probe, x, target);
            flat[i] = base[i] - step;
            probe.assign_flat(&flat).unwrap();
            let minus = oracle_loss(&probe, x, target);
            flat[i] = base[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Gradient-check tolerance: `max(1e-5 relative, 1e-7 absolute)`.
pub fn grad_close(analytic: f64, numeric: f64) -> bool {
    let tol = (1e-5 * analytic.abs().max(numeric.abs())).max(1e-7);
    (analytic - numeric).abs() <= tol
}

/// Pairwise AUROC: wins plus half ties over all (positive, negative) pairs.
pub fn pairwise_auroc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}
