//! Closed-form g-prior Bayes factors against the intercept-only model, the
//! prior on `g`, and the model-space prior. Everything is in natural log.
//!
//! ```text
//! ln B(γ:0)(g) = −((N−1)/2)·ln(1 + g·SSE_γ/SSE_0) + ((N−k_γ−1)/2)·ln(1 + g)
//! ```

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::PriorError;
use crate::linmodel::{FitState, ModelIndex};

/// How `g` is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GPrior {
    Fixed { g: f64 },
    /// `g ~ Inverse-Gamma(1/2, N/2)`, which makes the coefficient prior a
    /// multivariate Cauchy.
    ZellnerSiow { n: usize },
}

/// Prior over the `2^p` models. Only the constant prior is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelPrior {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPriorSpec {
    pub kind: GPrior,
    pub model_prior: ModelPrior,
}

impl GPriorSpec {
    pub fn fixed(g: f64) -> Result<Self, PriorError> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(PriorError::InvalidG(g));
        }
        Ok(Self { kind: GPrior::Fixed { g }, model_prior: ModelPrior::Uniform })
    }

    /// The unit-information choice `g = N`.
    pub fn unit_information(n: usize) -> Self {
        Self::fixed(n as f64).expect("n > 0")
    }

    pub fn zellner_siow(n: usize) -> Result<Self, PriorError> {
        if n == 0 {
            return Err(PriorError::InvalidSampleCount);
        }
        Ok(Self { kind: GPrior::ZellnerSiow { n }, model_prior: ModelPrior::Uniform })
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self.kind, GPrior::ZellnerSiow { .. })
    }

    pub fn fixed_g(&self) -> Option<f64> {
        match self.kind {
            GPrior::Fixed { g } => Some(g),
            GPrior::ZellnerSiow { .. } => None,
        }
    }

    /// Value of `g` a chain starts from: the fixed value, or `N` under the
    /// hierarchical prior.
    pub fn initial_g(&self) -> f64 {
        match self.kind {
            GPrior::Fixed { g } => g,
            GPrior::ZellnerSiow { n } => n as f64,
        }
    }

    /// `ln Pr(M_γ)`.
    pub fn log_model_prior(&self, model: &ModelIndex) -> f64 {
        self.log_model_prior_k(model.p(), model.k())
    }

    /// `ln Pr(M_γ)` for a model of size `k` among `p` candidates; every
    /// supported model prior depends on the model only through its size.
    #[inline]
    pub fn log_model_prior_k(&self, p: usize, _k: usize) -> f64 {
        match self.model_prior {
            ModelPrior::Uniform => -(p as f64) * LN_2,
        }
    }
}

/// `ln B(γ:0)(g)` together with what it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBayesFactor {
    pub value: f64,
    pub model: ModelIndex,
    pub g_used: f64,
    /// The model is rank deficient or has more than `N − 2` columns; `value` is `-∞`.
    pub excluded: bool,
}

/// Closed-form log Bayes factor from its sufficient statistics. Models with
/// `k > N − 2` are outside the model space and return `-∞`.
#[inline]
pub fn log_bf_from_sse(n: usize, k: usize, sse: f64, sse0: f64, g: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k + 2 > n {
        return f64::NEG_INFINITY;
    }
    let nm1 = (n - 1) as f64;
    let ratio = sse / sse0;
    -0.5 * nm1 * (g * ratio).ln_1p() + 0.5 * (nm1 - k as f64) * g.ln_1p()
}

/// `ln B(γ:0)(g)` for the model held by `state`; `-∞` when it is singular.
#[inline]
pub fn log_bf_value(state: &FitState<'_>, g: f64) -> f64 {
    if state.is_singular() {
        return f64::NEG_INFINITY;
    }
    let d = state.data();
    log_bf_from_sse(d.n(), state.k(), state.sse(), d.sse0(), g)
}

pub fn log_bf(state: &FitState<'_>, g: f64) -> LogBayesFactor {
    let value = log_bf_value(state, g);
    LogBayesFactor {
        value,
        model: state.model().clone(),
        g_used: g,
        excluded: value == f64::NEG_INFINITY,
    }
}

/// `ln B(γ:0) + ln Pr(M_γ)`, the log posterior up to the normalizing constant.
pub fn log_posterior_unnorm(lbf: &LogBayesFactor, prior: &GPriorSpec) -> f64 {
    lbf.value + prior.log_model_prior(&lbf.model)
}

/// Log density of `Inverse-Gamma(1/2, N/2)` at `g`.
pub fn log_prior_g_density(g: f64, spec: &GPriorSpec) -> Result<f64, PriorError> {
    match spec.kind {
        GPrior::Fixed { .. } => Err(PriorError::FixedHasNoDensity),
        GPrior::ZellnerSiow { n } => {
            if !(g > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            let scale = n as f64 / 2.0;
            Ok(0.5 * scale.ln() - 0.5 * PI.ln() - 1.5 * g.ln() - scale / g)
        }
    }
}

/// Draws `g ~ Inverse-Gamma(1/2, N/2)` as `N / Z²` with `Z` standard normal
/// (`Z²/N` is `Gamma(1/2, rate N/2)`).
pub fn sample_prior_g<R: Rng + ?Sized>(spec: &GPriorSpec, rng: &mut R) -> Result<f64, PriorError> {
    match spec.kind {
        GPrior::Fixed { .. } => Err(PriorError::FixedHasNoDensity),
        GPrior::ZellnerSiow { n } => loop {
            let z: f64 = StandardNormal.sample(rng);
            let g = n as f64 / (z * z);
            if g.is_finite() && g > 0.0 {
                return Ok(g);
            }
        },
    }
}
