//! Fixtures shared by the benchmarks in `benches/`.

use modelspace::synthetic::Synthetic;
use modelspace::Dataset;

/// Correlated design with a few active columns and `n = 4p` rows.
pub fn design(p: usize, seed: u64) -> Dataset {
    let effects = (0..p).step_by(4).map(|j| (j, 0.4)).collect();
    Synthetic { n: 4 * p, p, effects, noise_sd: 1.0, correlation: 0.3, seed }.generate()
}
