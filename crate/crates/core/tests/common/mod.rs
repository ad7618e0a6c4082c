#![allow(dead_code)]

use modelspace::bayesfactor::log_bf_from_sse;
use modelspace::linmodel::sse_direct;
use modelspace::logspace::log_sum_exp;
use modelspace::synthetic::Synthetic;
use modelspace::{Dataset, ModelIndex};

/// N = 50, p = 10, columns 1, 4 and 7 active.
pub fn p10() -> Dataset {
    Synthetic {
        n: 50,
        p: 10,
        effects: vec![(0, 0.5), (3, 0.5), (6, 0.5)],
        noise_sd: 1.0,
        correlation: 0.3,
        seed: 2,
    }
    .generate()
}

/// N = 30, p = 8, with every inclusion probability between 0.15 and 0.85.
pub fn p8() -> Dataset {
    Synthetic {
        n: 30,
        p: 8,
        effects: vec![(1, 0.35), (4, 0.35), (6, 0.35)],
        noise_sd: 1.0,
        correlation: 0.3,
        seed: 3,
    }
    .generate()
}

/// Posterior probability of every model, indexed by bitmask, from full
/// refits of each model.
pub fn naive_posterior(data: &Dataset, g: f64) -> Vec<f64> {
    let lbf = naive_log_bfs(data, g);
    let total = log_sum_exp(&lbf);
    lbf.iter().map(|v| (v - total).exp()).collect()
}

pub fn naive_log_bfs(data: &Dataset, g: f64) -> Vec<f64> {
    let p = data.p();
    (0..1u64 << p)
        .map(|m| {
            let model = ModelIndex::from_u64(p, m);
            match sse_direct(data, &model) {
                Ok(sse) => log_bf_from_sse(data.n(), model.k(), sse, data.sse0(), g),
                Err(_) => f64::NEG_INFINITY,
            }
        })
        .collect()
}

pub fn inclusion_of(post: &[f64], p: usize) -> Vec<f64> {
    (0..p)
        .map(|l| post.iter().enumerate().filter(|(m, _)| m >> l & 1 == 1).map(|(_, w)| w).sum())
        .collect()
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
