//! Posterior summaries from a chain.
//!
//! Two routes are offered. The empirical one averages a quantity over the
//! recorded draws (the Hansen-Hurwitz estimator) and comes with a standard
//! error. The renormalized one keeps each distinct visited model once and
//! weights it by its Bayes factor times prior mass, relative to the other
//! visited models; it has no standard error.

use std::collections::BTreeMap;
use std::fmt;

use crate::bayesfactor::GPriorSpec;
use crate::error::EstimateError;
use crate::linmodel::{Dataset, FitState, ModelIndex};
use crate::logspace::{log_sum_exp, to_log10};
use crate::sampler::ChainTrace;

/// A real function of the model, `a(M_γ)`, whose posterior mean is wanted.
pub struct QuantityOfInterest<'a> {
    label: String,
    eval: Box<dyn Fn(&ModelIndex) -> f64 + Send + Sync + 'a>,
}

impl<'a> QuantityOfInterest<'a> {
    pub fn new(label: impl Into<String>, eval: impl Fn(&ModelIndex) -> f64 + Send + Sync + 'a) -> Self {
        Self { label: label.into(), eval: Box::new(eval) }
    }

    /// `1` when column `l` is in the model.
    pub fn inclusion(l: usize) -> Self {
        Self::new(format!("inclusion[{l}]"), move |m| m.contains(l) as u8 as f64)
    }

    /// `1` when the model has exactly `k` columns.
    pub fn dimension(k: usize) -> Self {
        Self::new(format!("dimension[{k}]"), move |m| (m.k() == k) as u8 as f64)
    }

    /// `1` on one particular model.
    pub fn model(target: ModelIndex) -> Self {
        Self::new(format!("model[{target}]"), move |m| (*m == target) as u8 as f64)
    }

    /// Number of columns in the model.
    pub fn size() -> Self {
        Self::new("size", |m| m.k() as f64)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant[{c}]"), move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, model: &ModelIndex) -> f64 {
        (self.eval)(model)
    }
}

impl fmt::Debug for QuantityOfInterest<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantityOfInterest").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Empirical,
    Renormalized,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Empirical => "empirical",
            Method::Renormalized => "renormalized",
            Method::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithSE {
    pub value: f64,
    /// Present for empirical estimates from two or more draws, and `0` for exact values.
    pub se: Option<f64>,
    pub method: Method,
    /// Draws for empirical estimates, models otherwise.
    pub n_used: usize,
}

impl EstimateWithSE {
    pub fn exact(value: f64, n_models: usize) -> Self {
        Self { value, se: Some(0.0), method: Method::Exact, n_used: n_models }
    }
}

/// A model with its log Bayes factor against the null model.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub model: ModelIndex,
    pub log_bf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub method: Method,
    pub n_used: usize,
    pub inclusion: Vec<EstimateWithSE>,
    /// Entry `k` for models with `k` columns, `k = 0..=p`.
    pub dimension: Vec<EstimateWithSE>,
    pub hpm: RankedModel,
    pub mpm: ModelIndex,
    pub top_models: Vec<RankedModel>,
    pub top_k: usize,
    pub mass_log10: f64,
}

/// Mean of `values` with the unbiased variance estimate of that mean,
/// `Σ(aⱼ − τ̂)² / (n(n − 1))`.
pub fn hh_from_values(values: &[f64]) -> Result<EstimateWithSE, EstimateError> {
    let n = values.len();
    if n == 0 {
        return Err(EstimateError::Empty);
    }
    // a constant sample has exactly that mean and zero spread
    let mean = if values.iter().all(|&v| v == values[0]) {
        values[0]
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    let se = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|a| (a - mean) * (a - mean)).sum();
        (ss / (n as f64 * (n - 1) as f64)).sqrt()
    });
    Ok(EstimateWithSE { value: mean, se, method: Method::Empirical, n_used: n })
}

fn hh_models(models: &[ModelIndex], q: &QuantityOfInterest<'_>) -> Result<EstimateWithSE, EstimateError> {
    let values: Vec<f64> = models.iter().map(|m| q.eval(m)).collect();
    hh_from_values(&values)
}

pub fn hh_estimate(trace: &ChainTrace, q: &QuantityOfInterest<'_>) -> Result<EstimateWithSE, EstimateError> {
    hh_models(&trace.models, q)
}

/// Visit frequency of each column.
pub fn hh_inclusion(trace: &ChainTrace) -> Result<Vec<EstimateWithSE>, EstimateError> {
    (0..trace.p()).map(|l| hh_estimate(trace, &QuantityOfInterest::inclusion(l))).collect()
}

/// Visit frequency of each model size `0..=p`.
pub fn hh_dimension(trace: &ChainTrace) -> Result<Vec<EstimateWithSE>, EstimateError> {
    (0..=trace.p()).map(|k| hh_estimate(trace, &QuantityOfInterest::dimension(k))).collect()
}

/// `E(y_new | M_γ, y) = ȳ + g/(1+g) · (x_new − x̄)_γᵀ β̂_γ`, the posterior
/// predictive mean at `xnew` (original column scale) under one model.
///
/// For a rank-deficient model the prediction uses the columns that could be
/// factored.
pub fn conditional_predictive_mean(
    data: &Dataset,
    model: &ModelIndex,
    xnew: &[f64],
    g: f64,
) -> Result<f64, EstimateError> {
    check_covariates(data, xnew)?;
    let state = FitState::for_model(data, model);
    Ok(predict_with(&state, xnew, g))
}

fn check_covariates(data: &Dataset, xnew: &[f64]) -> Result<(), EstimateError> {
    if xnew.len() != data.p() {
        return Err(EstimateError::CovariateLength { expected: data.p(), found: xnew.len() });
    }
    Ok(())
}

fn least_squares_prediction(state: &FitState<'_>, xnew: &[f64]) -> f64 {
    let means = state.data().column_means();
    state
        .factored_coefficients()
        .into_iter()
        .map(|(j, b)| (xnew[j] - means[j]) * b)
        .sum()
}

fn predict_with(state: &FitState<'_>, xnew: &[f64], g: f64) -> f64 {
    state.data().ybar() + g / (1.0 + g) * least_squares_prediction(state, xnew)
}

/// Model-averaged predictive mean at `xnew`. Each draw is shrunk with the
/// `g` recorded alongside it, so hierarchical-`g` traces are handled too.
pub fn hh_predictive_mean(trace: &ChainTrace, data: &Dataset, xnew: &[f64]) -> Result<EstimateWithSE, EstimateError> {
    check_covariates(data, xnew)?;
    if trace.models.first().is_some_and(|m| m.p() != data.p()) {
        return Err(EstimateError::CovariateLength { expected: trace.p(), found: data.p() });
    }
    // least-squares part depends on the model only
    let mut cache: BTreeMap<&ModelIndex, f64> = BTreeMap::new();
    let values: Vec<f64> = trace
        .models
        .iter()
        .zip(&trace.g_draws)
        .map(|(m, &g)| {
            let ls = *cache
                .entry(m)
                .or_insert_with(|| least_squares_prediction(&FitState::for_model(data, m), xnew));
            data.ybar() + g / (1.0 + g) * ls
        })
        .collect();
    hh_from_values(&values)
}

/// Distinct models of a trace in ascending bitmask order, each with the
/// log Bayes factor recorded at its first visit.
pub fn distinct_models(trace: &ChainTrace) -> Vec<RankedModel> {
    let mut seen: BTreeMap<&ModelIndex, f64> = BTreeMap::new();
    for (m, &lbf) in trace.models.iter().zip(&trace.log_bfs) {
        seen.entry(m).or_insert(lbf);
    }
    seen.into_iter().map(|(m, log_bf)| RankedModel { model: m.clone(), log_bf }).collect()
}

/// Normalized posterior weights over `models`, relative to the set.
fn renormalized_weights(models: &[RankedModel], prior: &GPriorSpec) -> Result<Vec<f64>, EstimateError> {
    if models.is_empty() {
        return Err(EstimateError::Empty);
    }
    let terms: Vec<f64> = models.iter().map(|r| r.log_bf + prior.log_model_prior(&r.model)).collect();
    let total = log_sum_exp(&terms);
    if total == f64::NEG_INFINITY {
        return Err(EstimateError::AllExcluded);
    }
    Ok(terms.iter().map(|t| (t - total).exp()).collect())
}

/// `Σ w_γ a(M_γ)` with weights proportional to `B(γ:0)·Pr(M_γ)` over the set.
/// The set should hold each model once.
pub fn renormalized_estimate(
    models: &[RankedModel],
    q: &QuantityOfInterest<'_>,
    prior: &GPriorSpec,
) -> Result<EstimateWithSE, EstimateError> {
    let w = renormalized_weights(models, prior)?;
    Ok(weighted(models, &w, q))
}

fn weighted(models: &[RankedModel], w: &[f64], q: &QuantityOfInterest<'_>) -> EstimateWithSE {
    let value = models.iter().zip(w).map(|(r, w)| w * q.eval(&r.model)).sum();
    EstimateWithSE { value, se: None, method: Method::Renormalized, n_used: models.len() }
}

pub fn renormalized_inclusion(models: &[RankedModel], prior: &GPriorSpec) -> Result<Vec<EstimateWithSE>, EstimateError> {
    let w = renormalized_weights(models, prior)?;
    let p = models[0].model.p();
    Ok((0..p).map(|l| probability(weighted(models, &w, &QuantityOfInterest::inclusion(l)))).collect())
}

pub fn renormalized_dimension(models: &[RankedModel], prior: &GPriorSpec) -> Result<Vec<EstimateWithSE>, EstimateError> {
    let w = renormalized_weights(models, prior)?;
    let p = models[0].model.p();
    Ok((0..=p).map(|k| probability(weighted(models, &w, &QuantityOfInterest::dimension(k)))).collect())
}

/// The weights can sum to one plus an ulp; keep probabilities in range.
fn probability(mut e: EstimateWithSE) -> EstimateWithSE {
    e.value = e.value.min(1.0);
    e
}

/// Strict "better than" for rankings: larger value, then smaller bitmask.
#[inline]
fn outranks(a_val: f64, a: &ModelIndex, b_val: f64, b: &ModelIndex) -> bool {
    a_val > b_val || (a_val == b_val && a < b)
}

/// Model with the largest value (for instance the unnormalized log posterior);
/// ties go to the smaller bitmask.
pub fn find_hpm(models: &[(ModelIndex, f64)]) -> Result<ModelIndex, EstimateError> {
    let mut best: Option<&(ModelIndex, f64)> = None;
    for cand in models {
        if best.is_none_or(|b| outranks(cand.1, &cand.0, b.1, &b.0)) {
            best = Some(cand);
        }
    }
    best.map(|b| b.0.clone()).ok_or(EstimateError::Empty)
}

/// Columns whose inclusion probability is strictly above one half.
pub fn find_mpm(inclusion: &[EstimateWithSE]) -> ModelIndex {
    ModelIndex::from_indices(
        inclusion.len(),
        inclusion.iter().enumerate().filter(|(_, q)| q.value > 0.5).map(|(l, _)| l),
    )
}

/// The `k` models with the largest log Bayes factor, best first, ties by
/// ascending bitmask. Excluded models (`-∞`) are never listed.
pub fn top_models(models: &[RankedModel], k: usize) -> Vec<RankedModel> {
    let mut v: Vec<&RankedModel> = models.iter().filter(|r| r.log_bf > f64::NEG_INFINITY).collect();
    v.sort_by(|a, b| b.log_bf.total_cmp(&a.log_bf).then_with(|| a.model.cmp(&b.model)));
    v.into_iter().take(k).cloned().collect()
}

/// `log₁₀ Σ B(γ:0)` over the `k` best models of the set (all of them if fewer).
pub fn topk_mass_log10(models: &[RankedModel], k: usize) -> Result<f64, EstimateError> {
    if models.is_empty() {
        return Err(EstimateError::Empty);
    }
    let top: Vec<f64> = top_models(models, k).iter().map(|r| r.log_bf).collect();
    Ok(to_log10(log_sum_exp(&top)))
}

fn hpm_of(distinct: &[RankedModel], prior: &GPriorSpec) -> Result<RankedModel, EstimateError> {
    let scored: Vec<(ModelIndex, f64)> = distinct
        .iter()
        .map(|r| (r.model.clone(), r.log_bf + prior.log_model_prior(&r.model)))
        .collect();
    let hpm = find_hpm(&scored)?;
    Ok(distinct.iter().find(|r| r.model == hpm).expect("chosen from the set").clone())
}

fn assemble(
    method: Method,
    n_used: usize,
    inclusion: Vec<EstimateWithSE>,
    dimension: Vec<EstimateWithSE>,
    distinct: &[RankedModel],
    prior: &GPriorSpec,
    top_k: usize,
) -> Result<PosteriorSummary, EstimateError> {
    let mpm = find_mpm(&inclusion);
    Ok(PosteriorSummary {
        method,
        n_used,
        hpm: hpm_of(distinct, prior)?,
        mpm,
        top_models: top_models(distinct, top_k),
        top_k,
        mass_log10: topk_mass_log10(distinct, top_k)?,
        inclusion,
        dimension,
    })
}

/// Visit-frequency summary of a trace. HPM, top models and mass refer to the
/// distinct visited models.
pub fn summarize_empirical(trace: &ChainTrace, prior: &GPriorSpec, top_k: usize) -> Result<PosteriorSummary, EstimateError> {
    let distinct = distinct_models(trace);
    assemble(
        Method::Empirical,
        trace.len(),
        hh_inclusion(trace)?,
        hh_dimension(trace)?,
        &distinct,
        prior,
        top_k,
    )
}

/// Summary of a set of distinct models with probabilities renormalized over the set.
pub fn summarize_renormalized(
    distinct: &[RankedModel],
    prior: &GPriorSpec,
    top_k: usize,
) -> Result<PosteriorSummary, EstimateError> {
    assemble(
        Method::Renormalized,
        distinct.len(),
        renormalized_inclusion(distinct, prior)?,
        renormalized_dimension(distinct, prior)?,
        distinct,
        prior,
        top_k,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::sse_direct;
    use crate::sampler::{ChainMeta, SamplerConfig};
    use crate::synthetic;
    use crate::bayesfactor::log_bf_from_sse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trace_of(p: usize, masks: &[u64], g: f64) -> ChainTrace {
        let models: Vec<ModelIndex> = masks.iter().map(|&m| ModelIndex::from_u64(p, m)).collect();
        let n = models.len();
        ChainTrace {
            models,
            g_draws: vec![g; n],
            log_bfs: vec![0.0; n],
            meta: ChainMeta {
                config: SamplerConfig::new(n.max(1), GPriorSpec::fixed(g).unwrap()),
                wall_clock: Default::default(),
                g_acceptance: None,
                sse_checks: vec![],
                excluded_draws: 0,
            },
        }
    }

    fn ranked(p: usize, items: &[(u64, f64)]) -> Vec<RankedModel> {
        items.iter().map(|&(m, l)| RankedModel { model: ModelIndex::from_u64(p, m), log_bf: l }).collect()
    }

    #[test]
    fn hh_basics() {
        let e = hh_from_values(&[2.5; 7]).unwrap();
        assert_eq!((e.value, e.se), (2.5, Some(0.0)));
        let e = hh_from_values(&[0.0, 1.0]).unwrap();
        assert_eq!((e.value, e.se), (0.5, Some(0.5)));
        let e = hh_from_values(&[3.0]).unwrap();
        assert_eq!((e.value, e.se, e.n_used), (3.0, None, 1));
        assert_eq!(hh_from_values(&[]), Err(EstimateError::Empty));
    }

    #[test]
    fn inclusion_and_dimension_from_trace() {
        let t = trace_of(3, &[0b011, 0b001, 0b101, 0b001], 10.0);
        let q = hh_inclusion(&t).unwrap();
        assert_eq!(q[0].value, 1.0);
        assert_eq!(q[0].se, Some(0.0));
        assert_eq!(q[1].value, 0.25);
        assert_eq!(q[2].value, 0.25);
        let d = hh_dimension(&t).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.iter().map(|e| e.value).sum::<f64>(), 1.0);
        assert_eq!(d[1].value, 0.5);

        let t = trace_of(2, &[0b01, 0b00], 1.0);
        assert_eq!(hh_inclusion(&t).unwrap()[0].value, 0.5);
        let t = trace_of(4, &[0; 5], 1.0);
        let d = hh_dimension(&t).unwrap();
        assert_eq!(d[0].value, 1.0);
        assert!(d[1..].iter().all(|e| e.value == 0.0));
    }

    #[test]
    fn indicator_se_matches_closed_form_and_bound() {
        let masks: Vec<u64> = (0..37).map(|i| (i % 3 == 0) as u64).collect();
        let t = trace_of(1, &masks, 1.0);
        let e = hh_inclusion(&t).unwrap()[0];
        let (q, n) = (e.value, masks.len() as f64);
        let closed = (q * (1.0 - q) * n / (n - 1.0)).sqrt() / n.sqrt();
        assert!((e.se.unwrap() - closed).abs() < 1e-15);
        assert!(e.se.unwrap().powi(2) <= 1.0 / (4.0 * (n - 1.0)));
    }

    #[test]
    fn mpm_is_strict() {
        let est = |v| EstimateWithSE { value: v, se: None, method: Method::Exact, n_used: 1 };
        assert_eq!(find_mpm(&[est(0.6), est(0.4)]), ModelIndex::from_indices(2, [0]));
        assert_eq!(find_mpm(&[est(0.5), est(0.5000001)]), ModelIndex::from_indices(2, [1]));
    }

    #[test]
    fn hpm_ties_go_to_lowest_mask() {
        let m = |x| ModelIndex::from_u64(4, x);
        assert_eq!(find_hpm(&[(m(5), 1.0)]).unwrap(), m(5));
        assert_eq!(find_hpm(&[(m(9), 2.0), (m(3), 2.0), (m(6), 2.0)]).unwrap(), m(3));
        assert_eq!(find_hpm(&[(m(9), 2.0), (m(3), 1.0)]).unwrap(), m(9));
        assert_eq!(find_hpm(&[]), Err(EstimateError::Empty));
    }

    #[test]
    fn top_models_order_and_mass() {
        let set = ranked(4, &[(7, 1.0), (2, 3.0), (1, 1.0), (4, f64::NEG_INFINITY), (8, 2.0)]);
        let top = top_models(&set, 10);
        let masks: Vec<u64> = top.iter().map(|r| r.model.as_u64().unwrap()).collect();
        assert_eq!(masks, [2, 8, 1, 7]);
        assert_eq!(top_models(&set, 2).len(), 2);

        let ln5 = 5.0 * std::f64::consts::LN_10;
        let one = ranked(3, &[(1, ln5)]);
        assert!((topk_mass_log10(&one, 1000).unwrap() - 5.0).abs() < 1e-14);
        let two = ranked(3, &[(1, ln5), (2, ln5)]);
        assert!((topk_mass_log10(&two, 1000).unwrap() - (5.0 + 2f64.log10())).abs() < 1e-14);
        assert!((topk_mass_log10(&two, 1).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn renormalized_simple_cases() {
        let prior = GPriorSpec::fixed(10.0).unwrap();
        let size = QuantityOfInterest::size();
        let one = ranked(3, &[(0b111, 4.2)]);
        let e = renormalized_estimate(&one, &size, &prior).unwrap();
        assert_eq!((e.value, e.se, e.method), (3.0, None, Method::Renormalized));
        let two = ranked(3, &[(0b001, -1.5), (0b111, -1.5)]);
        assert!((renormalized_estimate(&two, &size, &prior).unwrap().value - 2.0).abs() < 1e-15);
        let dead = ranked(3, &[(0b001, f64::NEG_INFINITY)]);
        assert_eq!(renormalized_estimate(&dead, &size, &prior), Err(EstimateError::AllExcluded));
        assert_eq!(renormalized_estimate(&[], &size, &prior), Err(EstimateError::Empty));
    }

    #[test]
    fn distinct_keeps_first_visit() {
        let mut t = trace_of(3, &[5, 1, 5, 0, 1], 1.0);
        t.log_bfs = vec![1.0, 2.0, 9.0, 0.0, 7.0];
        let d = distinct_models(&t);
        let got: Vec<(u64, f64)> = d.iter().map(|r| (r.model.as_u64().unwrap(), r.log_bf)).collect();
        assert_eq!(got, [(0, 0.0), (1, 2.0), (5, 1.0)]);
    }

    /// Exact posterior over all models by refitting each from scratch.
    fn naive_posterior(data: &Dataset, g: f64) -> Vec<(ModelIndex, f64, f64)> {
        let p = data.p();
        let lbf: Vec<f64> = (0..1u64 << p)
            .map(|m| {
                let model = ModelIndex::from_u64(p, m);
                match sse_direct(data, &model) {
                    Ok(sse) => log_bf_from_sse(data.n(), model.k(), sse, data.sse0(), g),
                    Err(_) => f64::NEG_INFINITY,
                }
            })
            .collect();
        let total = log_sum_exp(&lbf);
        (0..1u64 << p)
            .map(|m| (ModelIndex::from_u64(p, m), lbf[m as usize], (lbf[m as usize] - total).exp()))
            .collect()
    }

    #[test]
    fn renormalizing_over_everything_is_exact() {
        let data = synthetic::regression(40, 8, &[0, 3, 5], 0.5, 1.0, 11);
        let g = data.n() as f64;
        let prior = GPriorSpec::fixed(g).unwrap();
        let post = naive_posterior(&data, g);
        let all: Vec<RankedModel> = post.iter().map(|(m, l, _)| RankedModel { model: m.clone(), log_bf: *l }).collect();
        let mut quantities: Vec<QuantityOfInterest> = (0..8).map(QuantityOfInterest::inclusion).collect();
        quantities.extend((0..=8).map(QuantityOfInterest::dimension));
        quantities.push(QuantityOfInterest::size());
        quantities.push(QuantityOfInterest::constant(1.0));
        quantities.push(QuantityOfInterest::model(ModelIndex::from_u64(8, 0b101001)));
        for q in &quantities {
            let exact: f64 = post.iter().map(|(m, _, w)| w * q.eval(m)).sum();
            let got = renormalized_estimate(&all, q, &prior).unwrap().value;
            assert!((got - exact).abs() < 1e-10, "{}: {got} vs {exact}", q.label());
        }
    }

    /// Draws i.i.d. from a known posterior: the frequency estimates are
    /// unbiased and the variance estimate is calibrated.
    #[test]
    fn hansen_hurwitz_unbiased_under_iid_draws() {
        let data = synthetic::regression(30, 8, &[1, 4], 0.35, 1.0, 5);
        let post = naive_posterior(&data, data.n() as f64);
        let mut cdf = Vec::with_capacity(post.len());
        let mut acc = 0.0;
        for (_, _, w) in &post {
            acc += w;
            cdf.push(acc);
        }
        let exact_q: Vec<f64> = (0..8)
            .map(|l| post.iter().filter(|(m, _, _)| m.contains(l)).map(|(_, _, w)| w).sum())
            .collect();

        let (reps, n) = (10_000usize, 200usize);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut sum_q = [0.0; 8];
        let mut sum_q2 = [0.0; 8];
        let mut sum_var = [0.0; 8];
        let mut models = Vec::with_capacity(n);
        for _ in 0..reps {
            models.clear();
            for _ in 0..n {
                let u: f64 = rng.random::<f64>() * acc;
                let i = cdf.partition_point(|&c| c < u).min(post.len() - 1);
                models.push(post[i].0.clone());
            }
            for l in 0..8 {
                let e = hh_models(&models, &QuantityOfInterest::inclusion(l)).unwrap();
                sum_q[l] += e.value;
                sum_q2[l] += e.value * e.value;
                sum_var[l] += e.se.unwrap().powi(2);
                // equality at q = 1/2, up to rounding
                assert!(e.se.unwrap().powi(2) <= (1.0 + 1e-12) / (4.0 * (n as f64 - 1.0)));
            }
        }
        let r = reps as f64;
        for l in 0..8 {
            let mean = sum_q[l] / r;
            let sd = ((sum_q2[l] - r * mean * mean) / (r - 1.0)).max(0.0).sqrt();
            let tol = 4.0 * sd / r.sqrt() + 1e-12;
            assert!((mean - exact_q[l]).abs() <= tol, "l={l}: {mean} vs {}", exact_q[l]);
            let analytic = exact_q[l] * (1.0 - exact_q[l]) / n as f64;
            if analytic > 1e-6 {
                let mean_var = sum_var[l] / r;
                assert!((mean_var / analytic - 1.0).abs() < 0.05, "l={l}: {mean_var} vs {analytic}");
            }
        }
    }

    /// Posterior mean of the slopes under the g-prior with flat priors on the
    /// intercept and `ln σ`, by brute-force quadrature of
    /// `(S(β) + βᵀX'X β / g)^{-(N+k-1)/2}` over a grid.
    fn quadrature_slopes(x: &[Vec<f64>], y: &[f64], g: f64, center: &[f64], half_width: &[f64], steps: usize) -> Vec<f64> {
        let n = y.len();
        let k = x.len();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - mean(y)).collect();
        let xc: Vec<Vec<f64>> = x.iter().map(|c| c.iter().map(|v| v - mean(c)).collect()).collect();
        let expo = -((n + k - 1) as f64) / 2.0;
        let q_of = |b: &[f64]| {
            let mut s = 0.0;
            let mut pen = 0.0;
            for i in 0..n {
                let fit: f64 = (0..k).map(|j| xc[j][i] * b[j]).sum();
                s += (yc[i] - fit).powi(2);
                pen += fit * fit;
            }
            s + pen / g
        };
        // log-density at the center, for scaling
        let q0 = q_of(center);
        let mut num = vec![0.0; k];
        let mut den = 0.0;
        let mut b = vec![0.0; k];
        let total = steps.pow(k as u32);
        for idx in 0..total {
            let mut r = idx;
            for j in 0..k {
                let t = (r % steps) as f64 / (steps - 1) as f64 * 2.0 - 1.0;
                r /= steps;
                b[j] = center[j] + t * half_width[j];
            }
            let w = (expo * (q_of(&b) / q0).ln()).exp();
            den += w;
            for j in 0..k {
                num[j] += w * b[j];
            }
        }
        num.iter().map(|v| v / den).collect()
    }

    #[test]
    fn predictive_mean_matches_quadrature() {
        let data = synthetic::regression(15, 3, &[0, 2], 0.8, 1.0, 3);
        let xnew = [0.7, -1.2, 1.9];
        for (cols, steps) in [(vec![2usize], 20_001usize), (vec![0, 2], 801)] {
            let model = ModelIndex::from_indices(3, cols.iter().copied());
            let g = 4.0;
            let state = FitState::for_model(&data, &model);
            let coef = state.coefficients().unwrap();
            let center: Vec<f64> = coef.iter().map(|&(_, b)| b * g / (1.0 + g)).collect();
            // about 40 posterior standard deviations either side
            let xs: Vec<Vec<f64>> = cols.iter().map(|&j| data.column(j).to_vec()).collect();
            let half: Vec<f64> = xs
                .iter()
                .map(|c| {
                    let m = c.iter().sum::<f64>() / c.len() as f64;
                    let sxx: f64 = c.iter().map(|v| (v - m).powi(2)).sum();
                    40.0 * (data.sse0() / data.n() as f64 / sxx).sqrt()
                })
                .collect();
            let slopes = quadrature_slopes(&xs, data.y(), g, &center, &half, steps);
            let oracle = data.ybar()
                + cols
                    .iter()
                    .zip(&slopes)
                    .map(|(&j, b)| (xnew[j] - data.column_means()[j]) * b)
                    .sum::<f64>();
            let got = conditional_predictive_mean(&data, &model, &xnew, g).unwrap();
            assert!((got - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "{cols:?}: {got} vs {oracle}");
        }
    }

    #[test]
    fn predictive_mean_limits() {
        let data = synthetic::regression(20, 3, &[1], 1.0, 0.5, 9);
        let xnew = [0.1, 2.0, -0.3];
        let t = trace_of(3, &[0; 6], 20.0);
        let e = hh_predictive_mean(&t, &data, &xnew).unwrap();
        assert!((e.value - data.ybar()).abs() < 1e-12 && e.se == Some(0.0));

        let model = ModelIndex::from_indices(3, [1]);
        let state = FitState::for_model(&data, &model);
        let ls = data.ybar() + least_squares_prediction(&state, &xnew);
        let near = conditional_predictive_mean(&data, &model, &xnew, 1e12).unwrap();
        assert!((near - ls).abs() < 1e-9 * (1.0 + ls.abs()));

        assert_eq!(
            hh_predictive_mean(&t, &data, &[1.0]),
            Err(EstimateError::CovariateLength { expected: 3, found: 1 })
        );
    }

    #[test]
    fn predictive_mean_uses_each_draws_g() {
        let data = synthetic::regression(25, 2, &[0], 1.0, 0.5, 4);
        let mut t = trace_of(2, &[1, 1], 1.0);
        t.g_draws = vec![1.0, 9.0];
        let xnew = [1.5, 0.0];
        let m = ModelIndex::from_u64(2, 1);
        let a = conditional_predictive_mean(&data, &m, &xnew, 1.0).unwrap();
        let b = conditional_predictive_mean(&data, &m, &xnew, 9.0).unwrap();
        let e = hh_predictive_mean(&t, &data, &xnew).unwrap();
        assert!((e.value - (a + b) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn summaries_are_consistent() {
        let data = synthetic::regression(40, 5, &[0, 1], 0.6, 1.0, 21);
        let prior = GPriorSpec::unit_information(data.n());
        let trace = crate::sampler::run_chain(&data, &SamplerConfig::new(3000, prior).with_seed(8)).unwrap();
        for s in [
            summarize_empirical(&trace, &prior, 10).unwrap(),
            summarize_renormalized(&distinct_models(&trace), &prior, 10).unwrap(),
        ] {
            let total: f64 = s.dimension.iter().map(|e| e.value).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(s.mpm, find_mpm(&s.inclusion));
            assert!(s.top_models.windows(2).all(|w| outranks(w[0].log_bf, &w[0].model, w[1].log_bf, &w[1].model)));
            assert_eq!(s.hpm, s.top_models[0]);
        }
    }

    proptest::proptest! {
        #[test]
        fn renormalized_probabilities_stay_in_range(
            lbfs in proptest::collection::btree_map(0u64..64, -50.0f64..50.0, 1..40),
        ) {
            let items: Vec<(u64, f64)> = lbfs.into_iter().collect();
            let models = ranked(6, &items);
            let prior = GPriorSpec::fixed(10.0).unwrap();
            let inc = renormalized_inclusion(&models, &prior).unwrap();
            let dim = renormalized_dimension(&models, &prior).unwrap();
            for e in inc.iter().chain(&dim) {
                proptest::prop_assert!((0.0..=1.0).contains(&e.value), "{}", e.value);
            }
            let total: f64 = dim.iter().map(|e| e.value).sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
