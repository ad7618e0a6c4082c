//! Seeded synthetic regression problems for tests, benchmarks and demos.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linmodel::Dataset;

/// Gaussian design with an optional shared factor (pairwise correlation
/// `correlation` between columns) and `y = 1 + Σ βⱼ xⱼ + σ ε`.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub n: usize,
    pub p: usize,
    pub effects: Vec<(usize, f64)>,
    pub noise_sd: f64,
    pub correlation: f64,
    pub seed: u64,
}

impl Synthetic {
    pub fn generate(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let rho = self.correlation.clamp(0.0, 0.999);
        let mut cols = vec![vec![0.0; self.n]; self.p];
        for t in 0..self.n {
            let f: f64 = StandardNormal.sample(&mut rng);
            for col in cols.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                col[t] = (1.0 - rho).sqrt() * e + rho.sqrt() * f;
            }
        }
        let y = (0..self.n)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                1.0 + self.effects.iter().map(|&(j, b)| b * cols[j][t]).sum::<f64>() + self.noise_sd * e
            })
            .collect();
        let names = (1..=self.p).map(|j| format!("x{j}")).collect();
        Dataset::new("y", y, names, cols).expect("synthetic data is well formed")
    }
}

/// Independent columns, the listed ones active with a common coefficient.
pub fn regression(n: usize, p: usize, active: &[usize], coef: f64, noise_sd: f64, seed: u64) -> Dataset {
    Synthetic {
        n,
        p,
        effects: active.iter().map(|&j| (j, coef)).collect(),
        noise_sd,
        correlation: 0.0,
        seed,
    }
    .generate()
}
