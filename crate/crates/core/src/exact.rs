//! Exhaustive enumeration of all `2^p` models with a fixed `g`.
//!
//! The space is split on its highest-order bits into shards. Each shard walks
//! its free low-order bits in Gray-code order, so consecutive models differ
//! in one column and each step is a single add or delete on the running
//! [`FitState`]. Shards run on a rayon pool and are reduced in index order,
//! so the result does not depend on the number of workers.
//!
//! Accumulators inside a shard share one log offset. Each model costs one
//! `exp`; the offset only moves when a term would exceed it by a factor of
//! `e^300`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::bayesfactor::{log_bf_value, GPriorSpec};
use crate::error::ExactError;
use crate::estimators::{EstimateWithSE, Method, PosteriorSummary, QuantityOfInterest, RankedModel};
use crate::linmodel::{Dataset, FitState, ModelIndex};
use crate::logspace::{log_sum_exp, to_log10};

/// Largest `p` enumerated without an explicit override.
pub const P_GUARD: usize = 30;
/// Bitmasks are walked as `u64`.
pub const MAX_P: usize = 63;

const RESCALE_SLACK: f64 = 300.0;

#[derive(Debug, Clone)]
pub struct ExactConfig {
    pub prior: GPriorSpec,
    pub top_k: usize,
    pub workers: usize,
    /// Number of high-order bits to shard on; by default enough for four
    /// shards per worker.
    pub shard_bits: Option<u32>,
    /// Allow `p` above [`P_GUARD`].
    pub force: bool,
}

impl ExactConfig {
    pub fn new(prior: GPriorSpec) -> Self {
        Self { prior, top_k: 1000, workers: 1, shard_bits: None, force: false }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_shard_bits(mut self, bits: u32) -> Self {
        self.shard_bits = Some(bits);
        self
    }

    pub fn with_top_k(mut self, k: usize) -> Self {
        self.top_k = k;
        self
    }

    fn g(&self) -> Result<f64, ExactError> {
        self.prior.fixed_g().ok_or(ExactError::HierarchicalG)
    }

    fn check_p(&self, p: usize) -> Result<(), ExactError> {
        if p > MAX_P {
            return Err(ExactError::Unsupported(p));
        }
        if p > P_GUARD && !self.force {
            return Err(ExactError::TooLarge { p, limit: P_GUARD });
        }
        Ok(())
    }

    fn bits_for(&self, p: usize) -> u32 {
        self.shard_bits.unwrap_or_else(|| default_shard_bits(self.workers, p)).min(p as u32)
    }
}

/// `ceil(log2(4 · workers))`, capped at `p`.
pub fn default_shard_bits(workers: usize, p: usize) -> u32 {
    let target = 4 * workers.max(1) as u64;
    let bits = u64::BITS - (target - 1).leading_zeros();
    bits.min(p as u32)
}

/// The models whose top `shard_bits` bits equal `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub p: usize,
    pub shard_bits: u32,
    pub index: u64,
}

impl Shard {
    pub fn free_bits(&self) -> u32 {
        self.p as u32 - self.shard_bits
    }

    pub fn fixed_mask(&self) -> u64 {
        if self.shard_bits == 0 {
            0
        } else {
            self.index << self.free_bits()
        }
    }

    pub fn size(&self) -> u64 {
        1u64 << self.free_bits()
    }
}

pub fn shards(p: usize, shard_bits: u32) -> Vec<Shard> {
    assert!(shard_bits as usize <= p && p <= MAX_P);
    (0..1u64 << shard_bits).map(|index| Shard { p, shard_bits, index }).collect()
}

/// Top-K entry; the heap keeps the worst on top.
#[derive(Debug, Clone, Copy)]
struct Entry {
    log_bf: f64,
    mask: u64,
}

impl Ord for Entry {
    // greater means worse: smaller Bayes factor, then larger bitmask
    fn cmp(&self, other: &Self) -> Ordering {
        other.log_bf.total_cmp(&self.log_bf).then(self.mask.cmp(&other.mask))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

struct TopK {
    k: usize,
    heap: BinaryHeap<Entry>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    #[inline]
    fn offer(&mut self, e: Entry) {
        if self.heap.len() < self.k {
            self.heap.push(e);
        } else if let Some(worst) = self.heap.peek() {
            if e < *worst {
                self.heap.pop();
                self.heap.push(e);
            }
        }
    }

    fn into_sorted(self) -> Vec<Entry> {
        // ascending by Ord is best first
        self.heap.into_sorted_vec()
    }
}

/// Accumulated output of one shard. Sums are scaled by `exp(-offset)`.
#[derive(Debug, Clone)]
pub struct ShardResult {
    pub shard: Shard,
    pub offset: f64,
    pub total: f64,
    pub inclusion: Vec<f64>,
    pub dimension: Vec<f64>,
    pub quantities: Vec<f64>,
    pub visited: u64,
    pub excluded: u64,
    /// Models whose log posterior term exceeds the requested threshold.
    pub above: u64,
    top: Vec<Entry>,
}

impl ShardResult {
    /// `ln Σ B(γ:0)·Pr(M_γ)` over the shard.
    pub fn log_total(&self) -> f64 {
        self.offset + self.total.ln()
    }

    /// Best models of the shard, best first.
    pub fn top_models(&self) -> Vec<RankedModel> {
        self.top.iter().map(|e| ranked(self.shard.p, e)).collect()
    }
}

fn ranked(p: usize, e: &Entry) -> RankedModel {
    RankedModel { model: ModelIndex::from_u64(p, e.mask), log_bf: e.log_bf }
}

struct Walk<'q> {
    g: f64,
    prior: GPriorSpec,
    top_k: usize,
    quantities: &'q [QuantityOfInterest<'q>],
    threshold: Option<f64>,
}

struct Acc {
    offset: f64,
    total: f64,
    inclusion: Vec<f64>,
    dimension: Vec<f64>,
    quantities: Vec<f64>,
}

impl Acc {
    fn rescale(&mut self, new_offset: f64) {
        let s = (self.offset - new_offset).exp();
        self.total *= s;
        for v in self.inclusion.iter_mut().chain(&mut self.dimension).chain(&mut self.quantities) {
            *v *= s;
        }
        self.offset = new_offset;
    }
}

/// Walks every model of `shard` and accumulates its posterior mass.
pub fn enumerate_shard(data: &Dataset, shard: Shard, g: f64, prior: &GPriorSpec, top_k: usize) -> ShardResult {
    let walk = Walk { g, prior: *prior, top_k, quantities: &[], threshold: None };
    walk_shard(data, shard, &walk)
}

fn walk_shard(data: &Dataset, shard: Shard, walk: &Walk<'_>) -> ShardResult {
    let p = data.p();
    assert_eq!(shard.p, p, "shard built for a different width");
    let log_prior: Vec<f64> = (0..=p).map(|k| walk.prior.log_model_prior_k(p, k)).collect();

    let mut mask = shard.fixed_mask();
    let mut state = FitState::for_model(data, &ModelIndex::from_u64(p, mask));
    let mut acc = Acc {
        offset: f64::NEG_INFINITY,
        total: 0.0,
        inclusion: vec![0.0; p],
        dimension: vec![0.0; p + 1],
        quantities: vec![0.0; walk.quantities.len()],
    };
    let mut top = TopK::new(walk.top_k.max(1));
    let (mut visited, mut excluded, mut above) = (0u64, 0u64, 0u64);

    let steps = shard.size();
    for i in 0..steps {
        if i > 0 {
            let bit = i.trailing_zeros() as usize;
            state.flip(bit);
            mask ^= 1 << bit;
        }
        visited += 1;
        let lbf = log_bf_value(&state, walk.g);
        if lbf == f64::NEG_INFINITY {
            excluded += 1;
            continue;
        }
        let k = mask.count_ones() as usize;
        let lp = lbf + log_prior[k];
        if walk.threshold.is_some_and(|t| lp > t) {
            above += 1;
        }
        if lp > acc.offset + RESCALE_SLACK || acc.offset == f64::NEG_INFINITY {
            acc.rescale(lp);
        }
        let w = (lp - acc.offset).exp();
        acc.total += w;
        acc.dimension[k] += w;
        let mut bits = mask;
        while bits != 0 {
            acc.inclusion[bits.trailing_zeros() as usize] += w;
            bits &= bits - 1;
        }
        if !walk.quantities.is_empty() {
            let m = ModelIndex::from_u64(p, mask);
            for (slot, q) in acc.quantities.iter_mut().zip(walk.quantities) {
                *slot += w * q.eval(&m);
            }
        }
        top.offer(Entry { log_bf: lbf, mask });
    }

    ShardResult {
        shard,
        offset: acc.offset,
        total: acc.total,
        inclusion: acc.inclusion,
        dimension: acc.dimension,
        quantities: acc.quantities,
        visited,
        excluded,
        above,
        top: top.into_sorted(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactHpm {
    pub model: ModelIndex,
    pub log_bf: f64,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub p: usize,
    pub g: f64,
    pub prior: GPriorSpec,
    /// `ln Σ_γ B(γ:0)·Pr(M_γ)`.
    pub log_norm_const: f64,
    pub inclusion: Vec<f64>,
    pub dimension: Vec<f64>,
    pub hpm: ExactHpm,
    pub top_models: Vec<RankedModel>,
    pub top_k: usize,
    pub visited: u64,
    /// Rank-deficient models, given Bayes factor zero.
    pub excluded_count: u64,
    pub shard_count: usize,
    /// Posterior means of the extra quantities, in request order.
    pub quantities: Vec<f64>,
    pub above_threshold: Option<u64>,
}

impl ExactResult {
    /// `ln Σ_γ B(γ:0)`.
    pub fn log_sum_bf(&self) -> f64 {
        self.log_norm_const - self.prior.log_model_prior_k(self.p, 0)
    }

    pub fn log10_sum_bf(&self) -> f64 {
        to_log10(self.log_sum_bf())
    }

    /// Posterior probability of a model with the given size and log Bayes factor.
    pub fn posterior(&self, log_bf: f64, k: usize) -> f64 {
        (log_bf + self.prior.log_model_prior_k(self.p, k) - self.log_norm_const).exp()
    }

    pub fn mpm(&self) -> ModelIndex {
        ModelIndex::from_indices(self.p, (0..self.p).filter(|&l| self.inclusion[l] > 0.5))
    }

    /// `log₁₀ Σ B(γ:0)` over the best `k` models (at most `top_k`).
    pub fn top_mass_log10(&self, k: usize) -> f64 {
        let v: Vec<f64> = self.top_models.iter().take(k).map(|r| r.log_bf).collect();
        to_log10(log_sum_exp(&v))
    }

    /// The result in the shape of a sampled summary, with zero standard errors.
    pub fn to_summary(&self) -> PosteriorSummary {
        let n = self.visited as usize;
        let inclusion: Vec<EstimateWithSE> = self.inclusion.iter().map(|&q| EstimateWithSE::exact(q, n)).collect();
        PosteriorSummary {
            method: Method::Exact,
            n_used: n,
            mpm: self.mpm(),
            inclusion,
            dimension: self.dimension.iter().map(|&d| EstimateWithSE::exact(d, n)).collect(),
            hpm: RankedModel { model: self.hpm.model.clone(), log_bf: self.hpm.log_bf },
            top_models: self.top_models.clone(),
            top_k: self.top_k,
            mass_log10: self.top_mass_log10(self.top_k),
        }
    }
}

/// Combines per-shard sums, in the order given, into normalized results.
/// The shards must be exactly the partition produced by [`shards`].
pub fn reduce_shards(parts: &[ShardResult], prior: &GPriorSpec, g: f64, top_k: usize) -> Result<ExactResult, ExactError> {
    let first = parts.first().ok_or_else(|| ExactError::IncompletePartition("no shards".into()))?;
    let (p, bits) = (first.shard.p, first.shard.shard_bits);
    let expected = 1u64 << bits;
    if parts.len() as u64 != expected {
        return Err(ExactError::IncompletePartition(format!("{} shards, expected {expected}", parts.len())));
    }
    for (i, s) in parts.iter().enumerate() {
        if s.shard != (Shard { p, shard_bits: bits, index: i as u64 }) {
            return Err(ExactError::IncompletePartition(format!("shard at position {i} is {:?}", s.shard)));
        }
        if s.visited != s.shard.size() {
            return Err(ExactError::IncompletePartition(format!(
                "shard {i} visited {} of {} models",
                s.visited,
                s.shard.size()
            )));
        }
    }

    let offset = parts.iter().map(|s| s.offset).fold(f64::NEG_INFINITY, f64::max);
    let nq = first.quantities.len();
    let mut total = 0.0;
    let mut inclusion = vec![0.0; p];
    let mut dimension = vec![0.0; p + 1];
    let mut quantities = vec![0.0; nq];
    for s in parts {
        if s.total == 0.0 {
            continue;
        }
        let f = (s.offset - offset).exp();
        total += s.total * f;
        for (a, b) in inclusion.iter_mut().zip(&s.inclusion) {
            *a += b * f;
        }
        for (a, b) in dimension.iter_mut().zip(&s.dimension) {
            *a += b * f;
        }
        for (a, b) in quantities.iter_mut().zip(&s.quantities) {
            *a += b * f;
        }
    }
    for v in inclusion.iter_mut().chain(&mut dimension).chain(&mut quantities) {
        *v /= total;
    }
    // Rounding can push a probability an ulp past one.
    for v in inclusion.iter_mut().chain(&mut dimension) {
        *v = v.min(1.0);
    }
    let log_norm_const = offset + total.ln();

    let mut top: Vec<Entry> = parts.iter().flat_map(|s| s.top.iter().copied()).collect();
    top.sort();
    top.truncate(top_k.max(1));
    let best = top[0];
    let k_best = best.mask.count_ones() as usize;
    let hpm = ExactHpm {
        model: ModelIndex::from_u64(p, best.mask),
        log_bf: best.log_bf,
        posterior: (best.log_bf + prior.log_model_prior_k(p, k_best) - log_norm_const).exp(),
    };
    top.truncate(top_k);

    Ok(ExactResult {
        p,
        g,
        prior: *prior,
        log_norm_const,
        inclusion,
        dimension,
        hpm,
        top_models: top.iter().map(|e| ranked(p, e)).collect(),
        top_k,
        visited: parts.iter().map(|s| s.visited).sum(),
        excluded_count: parts.iter().map(|s| s.excluded).sum(),
        shard_count: parts.len(),
        quantities,
        above_threshold: Some(parts.iter().map(|s| s.above).sum()),
    })
}

fn run(
    data: &Dataset,
    config: &ExactConfig,
    quantities: &[QuantityOfInterest<'_>],
    threshold: Option<f64>,
) -> Result<ExactResult, ExactError> {
    let p = data.p();
    config.check_p(p)?;
    let g = config.g()?;
    let walk = Walk { g, prior: config.prior, top_k: config.top_k, quantities, threshold };
    let jobs = shards(p, config.bits_for(p));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .expect("thread pool");
    let parts: Vec<ShardResult> = pool.install(|| jobs.par_iter().map(|&s| walk_shard(data, s, &walk)).collect());
    let mut result = reduce_shards(&parts, &config.prior, g, config.top_k)?;
    if threshold.is_none() {
        result.above_threshold = None;
    }
    Ok(result)
}

/// Enumerates every model.
pub fn enumerate(data: &Dataset, config: &ExactConfig) -> Result<ExactResult, ExactError> {
    run(data, config, &[], None)
}

/// Enumerates every model and also returns the exact posterior means of `quantities`.
pub fn enumerate_with(
    data: &Dataset,
    config: &ExactConfig,
    quantities: &[QuantityOfInterest<'_>],
) -> Result<ExactResult, ExactError> {
    run(data, config, quantities, None)
}

/// Exact posterior mean `Σ_γ a(M_γ) Pr(M_γ | y)`.
pub fn exact_quantity(data: &Dataset, config: &ExactConfig, q: QuantityOfInterest<'_>) -> Result<f64, ExactError> {
    Ok(run(data, config, std::slice::from_ref(&q), None)?.quantities[0])
}

/// Number of models strictly more probable than `model`.
///
/// Log posteriors computed along different update paths can differ in the
/// last few bits, so "strictly" means by more than `1e-9` in log.
pub fn models_above(data: &Dataset, config: &ExactConfig, model: &ModelIndex) -> Result<u64, ExactError> {
    let g = config.g()?;
    let state = FitState::for_model(data, model);
    let lp = log_bf_value(&state, g) + config.prior.log_model_prior(model);
    let result = run(data, config, &[], Some(lp + 1e-9 * lp.abs().max(1.0)))?;
    Ok(result.above_threshold.unwrap_or(0))
}
