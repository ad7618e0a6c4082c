//! JSON reports. The layout is described by `schemas/report.schema.json`;
//! bump [`SCHEMA_VERSION`] on any incompatible change.

use modelspace::estimators::{EstimateWithSE, PosteriorSummary, RankedModel};
use modelspace::logspace::to_log10;
use modelspace::{Dataset, ModelIndex};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: String,
    pub response: String,
    pub n: usize,
    pub p: usize,
    pub names: Vec<String>,
    pub digest: String,
    pub warnings: Vec<String>,
}

impl DatasetInfo {
    pub fn new(path: &str, data: &Dataset, digest: String) -> Self {
        Self {
            path: path.to_string(),
            response: data.response().to_string(),
            n: data.n(),
            p: data.p(),
            names: data.names().to_vec(),
            digest,
            warnings: data.warnings().to_vec(),
        }
    }
}

/// Flags a run was made with. Fields that do not apply to a subcommand are omitted.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigEcho {
    /// `fixed` or `zellner-siow`.
    pub prior: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub model_prior: String,
    pub top_k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sse_check_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shard_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visited: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableEstimate {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub k: usize,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRef {
    pub mask: String,
    pub variables: Vec<String>,
}

impl ModelRef {
    pub fn new(model: &ModelIndex, names: &[String]) -> Self {
        Self { mask: model.to_hex(), variables: model.iter_ones().map(|j| names[j].clone()).collect() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hpm {
    pub mask: String,
    pub variables: Vec<String>,
    pub log_bf: f64,
    pub log10_bf: f64,
    /// Posterior probability; known only for exact results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopModel {
    pub mask: String,
    pub log10_bf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    /// `empirical`, `renormalized` or `exact`.
    pub method: String,
    pub n_used: usize,
    pub inclusion: Vec<VariableEstimate>,
    pub dimension: Vec<DimensionEstimate>,
    pub hpm: Hpm,
    pub mpm: ModelRef,
    pub top_k: usize,
    pub top_models: Vec<TopModel>,
    /// `log₁₀` of the summed Bayes factors of `top_models`.
    pub mass_log10: f64,
}

impl Summary {
    pub fn new(s: &PosteriorSummary, names: &[String], hpm_posterior: Option<f64>) -> Self {
        let est = |e: &EstimateWithSE| (e.value, e.se);
        Self {
            method: s.method.as_str().to_string(),
            n_used: s.n_used,
            inclusion: s
                .inclusion
                .iter()
                .zip(names)
                .map(|(e, name)| {
                    let (value, se) = est(e);
                    VariableEstimate { name: name.clone(), value, se }
                })
                .collect(),
            dimension: s
                .dimension
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let (value, se) = est(e);
                    DimensionEstimate { k, value, se }
                })
                .collect(),
            hpm: Hpm {
                mask: s.hpm.model.to_hex(),
                variables: ModelRef::new(&s.hpm.model, names).variables,
                log_bf: s.hpm.log_bf,
                log10_bf: to_log10(s.hpm.log_bf),
                posterior: hpm_posterior,
            },
            mpm: ModelRef::new(&s.mpm, names),
            top_k: s.top_k,
            top_models: s.top_models.iter().map(top_model).collect(),
            mass_log10: s.mass_log10,
        }
    }
}

fn top_model(r: &RankedModel) -> TopModel {
    TopModel { mask: r.model.to_hex(), log10_bf: to_log10(r.log_bf) }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactInfo {
    pub log_norm_const: f64,
    pub log10_sum_bf: f64,
    pub visited: u64,
    pub excluded_count: u64,
    pub shard_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models_above_mpm: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_acceptance: Option<f64>,
    /// Recorded draws (sampler) or models (enumeration) with a rank-deficient design.
    pub excluded: u64,
    pub sse_checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sse_max_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// `gibbs` or `exact`.
    pub command: String,
    pub dataset: DatasetInfo,
    pub config: ConfigEcho,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renormalized: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactInfo>,
    pub diagnostics: Diagnostics,
    pub timing: Vec<Phase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    /// `empirical`, `renormalized` or `external`.
    pub method: String,
    /// Seed of the chain, or the visited-model file.
    pub source: String,
    pub inclusion: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<Vec<f64>>,
    pub hpm: String,
    pub mpm: String,
    pub mass_log10: f64,
    pub distinct_models: usize,
    /// Whether the exact HPM was among the visited models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpm_visited: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableStats {
    pub name: String,
    pub mean_estimate: f64,
    /// Mean of the per-run standard errors, where the method provides them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_se: Option<f64>,
    /// Standard deviation across runs (denominator R − 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    pub runs: usize,
    pub variables: Vec<VariableStats>,
    pub mass_log10: MeanSd,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpm_hits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mpm_hits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpm_visited: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reference {
    pub path: String,
    pub log10_sum_bf: f64,
    pub hpm: ModelRef,
    pub mpm: ModelRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    /// Always `compare`.
    pub command: String,
    pub dataset: DatasetInfo,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    pub methods: Vec<MethodStats>,
    pub runs: Vec<RunRow>,
    pub timing: Vec<Phase>,
}

/// Mean and, for two or more values, the standard deviation with denominator `R − 1`.
pub fn mean_sd(xs: &[f64]) -> MeanSd {
    let n = xs.len() as f64;
    let mean = if xs.iter().all(|&x| x == xs[0]) { xs[0] } else { xs.iter().sum::<f64>() / n };
    let sd = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    MeanSd { mean, sd }
}
