//! Shared fixtures and independent reference computations for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt_core::polytope::{av_swaps, swapped};
use trajopt_core::{validate, ProblemInstance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spectrum; with `degenerate`, entries are drawn from a few integer levels so ties occur.
pub fn random_lambda(r: &mut ChaCha8Rng, d: usize, degenerate: bool) -> Vec<f64> {
    let raw: Vec<f64> = if degenerate {
        (0..d).map(|_| r.random_range(0..4) as f64).collect()
    } else {
        (0..d).map(|_| r.random_range(0.01..1.0)).collect()
    };
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return vec![1.0 / d as f64; d];
    }
    raw.into_iter().map(|x| x / total).collect()
}

fn random_coeffs(r: &mut ChaCha8Rng, d: usize, degenerate: bool) -> Vec<f64> {
    if degenerate {
        (0..d).map(|_| r.random_range(0..3) as f64 * 0.5).collect()
    } else {
        (0..d).map(|_| r.random_range(-1.0..1.0)).collect()
    }
}

/// Random validated instance. With `degenerate`, λ, a and E all carry planted ties.
pub fn random_instance(r: &mut ChaCha8Rng, d: usize, degenerate: bool) -> ProblemInstance {
    let lambda = random_lambda(r, d, degenerate);
    let a = random_coeffs(r, d, degenerate);
    let e = random_coeffs(r, d, degenerate);
    validate(ProblemInstance::new(lambda, a, e)).expect("generated instance is valid")
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `n! / Π s_i!` for the multiplicities of exactly equal entries.
pub fn multinomial_reference(values: &[f64]) -> u128 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    let mut denom = 1u128;
    let mut run = 1;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            denom *= fact(run);
            run = 1;
        }
    }
    fact(sorted.len()) / denom
}

/// Distinct neighbors of `v` reachable by one adjacent-value swap.
pub fn av_neighbors(v: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = av_swaps(v, eps)
        .into_iter()
        .map(|s| swapped(v, s.k, s.l))
        .collect();
    out.sort_by(|x, y| x.iter().zip(y).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    out.dedup();
    out
}
