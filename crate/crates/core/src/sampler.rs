//! Gibbs sampling over inclusion indicators.
//!
//! One raw iteration is a systematic sweep over the `p` indicators in index
//! order, each drawn from its full conditional
//!
//! ```text
//! γᵢ | γ₋ᵢ, g, y ~ Bernoulli(pᵢ),   pᵢ = Bₐ Pr(Mₐ) / (Bₐ Pr(Mₐ) + B_b Pr(M_b))
//! ```
//!
//! where `a` and `b` are the current model with bit `i` set and cleared. Under
//! the Zellner-Siow prior each sweep is followed by one independence
//! Metropolis-Hastings update of `g` that proposes from the prior, so the
//! acceptance ratio reduces to `B(g*) / B(g)`.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; chains are
//! bit-reproducible per seed.

use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayesfactor::{log_bf_value, sample_prior_g, GPriorSpec};
use crate::error::SamplerError;
use crate::linmodel::{sse_direct, Dataset, FitState, ModelIndex};
use crate::logspace::two_way_probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Start {
    #[default]
    Null,
    Full,
    /// Each indicator an independent fair coin.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Number of recorded draws.
    pub iterations: usize,
    /// Raw sweeps discarded before recording starts.
    pub burn: usize,
    /// Record every `thin`-th raw sweep after burn-in.
    pub thin: usize,
    pub seed: u64,
    pub start: Start,
    pub prior: GPriorSpec,
    /// Compare the incremental SSE against a full refit every this many raw
    /// sweeps; 0 disables the check.
    pub sse_check_every: usize,
}

impl SamplerConfig {
    pub fn new(iterations: usize, prior: GPriorSpec) -> Self {
        Self {
            iterations,
            burn: 0,
            thin: 1,
            seed: 0,
            start: Start::Null,
            prior,
            sse_check_every: 1000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn raw_sweeps(&self) -> usize {
        self.burn + self.iterations * self.thin
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.iterations == 0 {
            return Err(SamplerError::Config("iterations must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(SamplerError::Config("thin must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SseCheck {
    pub sweep: usize,
    /// `|SSE_incremental − SSE_refit| / SSE₀`.
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct ChainMeta {
    pub config: SamplerConfig,
    pub wall_clock: Duration,
    /// Fraction of accepted `g` proposals; `None` for a fixed `g`.
    pub g_acceptance: Option<f64>,
    pub sse_checks: Vec<SseCheck>,
    /// Recorded draws whose model was rank deficient.
    pub excluded_draws: usize,
}

/// The recorded output of one chain; `models`, `g_draws` and `log_bfs` are aligned.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub models: Vec<ModelIndex>,
    pub g_draws: Vec<f64>,
    pub log_bfs: Vec<f64>,
    pub meta: ChainMeta,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn p(&self) -> usize {
        self.models.first().map_or(0, ModelIndex::p)
    }
}

/// `ln Bₓ Pr(Mₓ)` for the model currently held by `state`. The `π(g | γ)`
/// factor of the conditional is omitted: neither prior on `g` depends on `γ`,
/// so it cancels between the two branches.
#[inline]
fn log_weight(state: &FitState<'_>, g: f64, prior: &GPriorSpec) -> f64 {
    log_bf_value(state, g) + prior.log_model_prior(state.model())
}

/// `Pr(γᵢ = 1 | γ₋ᵢ, g, y)`. Evaluates the other branch with one add or
/// delete and restores `state` before returning.
pub fn gibbs_component_prob(state: &mut FitState<'_>, i: usize, g: f64, prior: &GPriorSpec) -> f64 {
    let here = log_weight(state, g, prior);
    let was_in = state.model().contains(i);
    state.flip(i);
    let there = log_weight(state, g, prior);
    state.flip(i);
    if was_in {
        two_way_probability(here, there)
    } else {
        two_way_probability(there, here)
    }
}

/// One systematic-scan sweep.
pub fn gibbs_sweep<R: Rng + ?Sized>(state: &mut FitState<'_>, g: f64, prior: &GPriorSpec, rng: &mut R) {
    let mut current = log_weight(state, g, prior);
    for i in 0..state.data().p() {
        let was_in = state.model().contains(i);
        state.flip(i);
        let flipped = log_weight(state, g, prior);
        let p_in = if was_in {
            two_way_probability(current, flipped)
        } else {
            two_way_probability(flipped, current)
        };
        let draw_in = rng.random::<f64>() < p_in;
        if draw_in == was_in {
            state.flip(i);
        } else {
            current = flipped;
        }
    }
}

/// A sweep with caller-supplied inclusion probabilities; lets tests force
/// degenerate conditionals.
pub fn sweep_with<R, F>(state: &mut FitState<'_>, rng: &mut R, mut p_in: F)
where
    R: Rng + ?Sized,
    F: FnMut(&mut FitState<'_>, usize) -> f64,
{
    for i in 0..state.data().p() {
        let p = p_in(state, i);
        let draw_in = rng.random::<f64>() < p;
        if draw_in != state.model().contains(i) {
            state.flip(i);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GStep {
    pub g: f64,
    pub accepted: bool,
}

/// Independence Metropolis-Hastings update of `g` with proposal `π(g)`.
/// Returns the current value unchanged (and not accepted) for a fixed `g`.
pub fn mh_step_g<R: Rng + ?Sized>(state: &FitState<'_>, g: f64, prior: &GPriorSpec, rng: &mut R) -> GStep {
    if !prior.is_hierarchical() {
        return GStep { g, accepted: false };
    }
    let proposal = sample_prior_g(prior, rng).expect("hierarchical prior has a sampler");
    let log_ratio = log_bf_value(state, proposal) - log_bf_value(state, g);
    let u: f64 = rng.random();
    // a singular model has B = 0 for every g; the ratio is then NaN and the
    // proposal is taken as is
    let accepted = log_ratio.is_nan() || log_ratio >= 0.0 || u.ln() < log_ratio;
    GStep { g: if accepted { proposal } else { g }, accepted }
}

/// Runs one chain to completion.
pub fn run_chain(data: &Dataset, config: &SamplerConfig) -> Result<ChainTrace, SamplerError> {
    config.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = data.p();
    let prior = config.prior;

    let start_model = match config.start {
        Start::Null => ModelIndex::empty(p),
        Start::Full => ModelIndex::full(p),
        Start::Random => ModelIndex::from_indices(p, (0..p).filter(|_| rng.random_bool(0.5))),
    };
    let mut state = FitState::for_model(data, &start_model);
    let mut g = prior.initial_g();

    let n = config.iterations;
    let mut models = Vec::with_capacity(n);
    let mut g_draws = Vec::with_capacity(n);
    let mut log_bfs = Vec::with_capacity(n);
    let mut accepted = 0usize;
    let mut sse_checks = Vec::new();
    let mut excluded_draws = 0usize;

    for sweep in 1..=config.raw_sweeps() {
        gibbs_sweep(&mut state, g, &prior, &mut rng);
        if prior.is_hierarchical() {
            let step = mh_step_g(&state, g, &prior, &mut rng);
            g = step.g;
            accepted += step.accepted as usize;
        }
        if config.sse_check_every > 0 && sweep % config.sse_check_every == 0 {
            if let Ok(direct) = sse_direct(data, state.model()) {
                sse_checks.push(SseCheck {
                    sweep,
                    rel_error: (state.sse() - direct).abs() / data.sse0(),
                });
            }
        }
        if sweep > config.burn && (sweep - config.burn).is_multiple_of(config.thin) {
            let lbf = log_bf_value(&state, g);
            excluded_draws += (lbf == f64::NEG_INFINITY) as usize;
            models.push(state.model().clone());
            g_draws.push(g);
            log_bfs.push(lbf);
        }
    }

    let g_acceptance = prior
        .is_hierarchical()
        .then(|| accepted as f64 / config.raw_sweeps() as f64);
    Ok(ChainTrace {
        models,
        g_draws,
        log_bfs,
        meta: ChainMeta {
            config: config.clone(),
            wall_clock: started.elapsed(),
            g_acceptance,
            sse_checks,
            excluded_draws,
        },
    })
}

/// Seed for chain `index` of a multi-chain run: the first word of the ChaCha8
/// stream `index` keyed by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesfactor::log_bf_from_sse;
    use crate::synthetic;

    fn prior_for(d: &Dataset) -> GPriorSpec {
        GPriorSpec::unit_information(d.n())
    }

    #[test]
    fn equal_weights_give_half() {
        for v in [-1e3, -3.5, 0.0, 42.0, 700.0] {
            assert_eq!(two_way_probability(v, v), 0.5);
        }
    }

    #[test]
    fn irrelevant_duplicate_gives_half() {
        // with g → 0 every Bayes factor tends to 1, so ln r = 0
        let d = synthetic::regression(20, 3, &[0], 1.0, 1.0, 3);
        let mut s = FitState::empty(&d);
        s.add_variable(1).unwrap();
        let p = gibbs_component_prob(&mut s, 0, 1e-300, &prior_for(&d));
        assert_eq!(p, 0.5);
        assert_eq!(s.model().iter_ones().collect::<Vec<_>>(), [1]);
    }

    #[test]
    fn component_prob_matches_refit_oracle() {
        let d = synthetic::regression(20, 5, &[0, 3], 0.8, 1.0, 17);
        let prior = prior_for(&d);
        let g = 20.0;
        for mask in 0u64..32 {
            let m = ModelIndex::from_u64(5, mask);
            let mut s = FitState::for_model(&d, &m);
            for i in 0..5 {
                let mut a = m.clone();
                a.set(i);
                let mut b = m.clone();
                b.clear(i);
                let lb = |x: &ModelIndex| {
                    let sse = sse_direct(&d, x).unwrap();
                    (log_bf_from_sse(20, x.k(), sse, d.sse0(), g)).exp()
                };
                let (ba, bb) = (lb(&a), lb(&b));
                let oracle = ba / (ba + bb);
                let p = gibbs_component_prob(&mut s, i, g, &prior);
                assert!((p - oracle).abs() < 1e-10, "mask {mask:x} i {i}");
                assert_eq!(s.model(), &m);
            }
        }
    }

    #[test]
    fn forced_conditionals() {
        let d = synthetic::regression(30, 6, &[0], 1.0, 1.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = FitState::empty(&d);
        sweep_with(&mut s, &mut rng, |_, _| 1.0);
        assert_eq!(s.model(), &ModelIndex::full(6));
        sweep_with(&mut s, &mut rng, |_, _| 0.0);
        assert!(s.model().is_null());
    }

    #[test]
    fn g_step_on_null_model_always_accepts() {
        let d = synthetic::regression(15, 3, &[0], 1.0, 1.0, 5);
        let prior = GPriorSpec::zellner_siow(15).unwrap();
        let s = FitState::empty(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = 15.0;
        for _ in 0..1000 {
            let step = mh_step_g(&s, g, &prior, &mut rng);
            assert!(step.accepted);
            g = step.g;
        }
    }

    #[test]
    fn g_step_skipped_for_fixed_g() {
        let d = synthetic::regression(15, 3, &[0], 1.0, 1.0, 5);
        let s = FitState::empty(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let before = rng.clone().next_u64();
        let step = mh_step_g(&s, 15.0, &prior_for(&d), &mut rng);
        assert_eq!(step, GStep { g: 15.0, accepted: false });
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn g_step_with_identical_proposal_accepts() {
        // ratio B(g*)/B(g) = 1 when g* = g
        let d = synthetic::regression(15, 3, &[0, 1], 1.0, 1.0, 5);
        let s = FitState::for_model(&d, &ModelIndex::full(3));
        assert_eq!(log_bf_value(&s, 9.0) - log_bf_value(&s, 9.0), 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let d = synthetic::regression(40, 8, &[0, 5], 0.5, 1.0, 12);
        for prior in [prior_for(&d), GPriorSpec::zellner_siow(40).unwrap()] {
            let mut cfg = SamplerConfig::new(300, prior).with_seed(99);
            cfg.start = Start::Random;
            let a = run_chain(&d, &cfg).unwrap();
            let b = run_chain(&d, &cfg).unwrap();
            assert_eq!(a.models, b.models);
            assert_eq!(a.g_draws, b.g_draws);
            assert_eq!(
                a.log_bfs.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.log_bfs.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn burn_and_thin_accounting() {
        let d = synthetic::regression(40, 5, &[0], 1.0, 1.0, 12);
        let mut cfg = SamplerConfig::new(1, prior_for(&d));
        let t = run_chain(&d, &cfg).unwrap();
        assert_eq!((t.models.len(), t.g_draws.len(), t.log_bfs.len()), (1, 1, 1));
        cfg.iterations = 7;
        cfg.burn = 5;
        cfg.thin = 3;
        assert_eq!(cfg.raw_sweeps(), 26);
        let t = run_chain(&d, &cfg).unwrap();
        assert_eq!(t.len(), 7);
        cfg.thin = 0;
        assert!(run_chain(&d, &cfg).is_err());
        cfg.thin = 1;
        cfg.iterations = 0;
        assert!(run_chain(&d, &cfg).is_err());
    }

    #[test]
    fn cached_log_bfs_match_recomputation() {
        let d = synthetic::regression(40, 8, &[1, 2], 0.6, 1.0, 31);
        let cfg = SamplerConfig::new(500, GPriorSpec::zellner_siow(40).unwrap()).with_seed(3);
        let t = run_chain(&d, &cfg).unwrap();
        for ((m, &g), &lbf) in t.models.iter().zip(&t.g_draws).zip(&t.log_bfs) {
            let s = FitState::for_model(&d, m);
            assert!((log_bf_value(&s, g) - lbf).abs() < 1e-10);
        }
        let acc = t.meta.g_acceptance.unwrap();
        assert!(acc > 0.0 && acc <= 1.0);
    }

    #[test]
    fn sse_spot_checks_stay_tight() {
        let d = synthetic::regression(60, 15, &[0, 4, 9], 0.5, 1.0, 8);
        let mut cfg = SamplerConfig::new(5000, prior_for(&d)).with_seed(1);
        cfg.start = Start::Full;
        let t = run_chain(&d, &cfg).unwrap();
        assert_eq!(t.meta.sse_checks.len(), 5);
        for c in &t.meta.sse_checks {
            assert!(c.rel_error <= 1e-8, "{c:?}");
        }
    }

    #[test]
    fn seeds_derive_distinct_streams() {
        let seeds: Vec<u64> = (0..10).map(|i| derive_seed(42, i)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), 10);
        assert_eq!(derive_seed(42, 3), seeds[3]);
    }

    /// Exact posterior over all `2^p` models by direct refits.
    fn brute_posterior(d: &Dataset, g: f64) -> Vec<f64> {
        let p = d.p();
        let w: Vec<f64> = (0u64..1 << p)
            .map(|m| {
                let m = ModelIndex::from_u64(p, m);
                let sse = sse_direct(d, &m).unwrap();
                log_bf_from_sse(d.n(), m.k(), sse, d.sse0(), g)
            })
            .collect();
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = w.iter().map(|v| (v - max).exp()).sum();
        w.iter().map(|v| (v - max).exp() / z).collect()
    }

    #[test]
    fn stationary_distribution_small_space() {
        let d = synthetic::Synthetic {
            n: 25,
            p: 4,
            effects: vec![(0, 0.6), (2, 0.3)],
            noise_sd: 1.0,
            correlation: 0.3,
            seed: 41,
        }
        .generate();
        let g = 25.0;
        let exact = brute_posterior(&d, g);
        let mut cfg = SamplerConfig::new(1_000_000, prior_for(&d)).with_seed(8);
        cfg.sse_check_every = 0;
        let t = run_chain(&d, &cfg).unwrap();
        let mut counts = [0usize; 16];
        for m in &t.models {
            counts[m.as_u64().unwrap() as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &q)| (c as f64 / t.len() as f64 - q).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv = {tv}");
    }
}
