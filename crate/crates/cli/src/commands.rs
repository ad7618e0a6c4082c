use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use modelspace::bayesfactor::log_bf_value;
use modelspace::estimators::{
    distinct_models, summarize_empirical, summarize_renormalized, PosteriorSummary, RankedModel,
};
use modelspace::exact::{enumerate, models_above, ExactConfig, ExactResult};
use modelspace::sampler::{derive_seed, run_chain, ChainTrace, SamplerConfig, Start};
use modelspace::{Dataset, FitState, GPriorSpec, ModelIndex};

use crate::args::{CompareArgs, DataArgs, ExactArgs, ExpandArgs, GibbsArgs, MethodArg, PriorArgs, StartArg};
use crate::digest::dataset_digest;
use crate::error::{io_error, CliError};
use crate::report::*;
use crate::trace::{read_trace, write_trace};

struct Timer(Vec<Phase>);

impl Timer {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.push(Phase { name: name.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }
}

fn load(args: &DataArgs) -> Result<Dataset, CliError> {
    let data = Dataset::load_csv(&args.data, &args.response)?;
    for w in data.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(data)
}

fn prior_from(args: &PriorArgs, n: usize) -> Result<GPriorSpec, CliError> {
    if args.zellner_siow {
        return Ok(GPriorSpec::zellner_siow(n)?);
    }
    Ok(GPriorSpec::fixed(args.g.unwrap_or(n as f64))?)
}

fn prior_echo(prior: &GPriorSpec) -> (String, Option<f64>) {
    match prior.fixed_g() {
        Some(g) => ("fixed".into(), Some(g)),
        None => ("zellner-siow".into(), None),
    }
}

fn start_of(s: StartArg) -> (Start, &'static str) {
    match s {
        StartArg::Null => (Start::Null, "null"),
        StartArg::Full => (Start::Full, "full"),
        StartArg::Random => (Start::Random, "random"),
    }
}

/// Flag, then `MODELSPACE_WORKERS`, then the number of cores.
fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return if w == 0 { Err(CliError::Usage("--workers must be at least 1".into())) } else { Ok(w) };
    }
    if let Ok(v) = std::env::var("MODELSPACE_WORKERS") {
        return match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(CliError::Usage(format!("MODELSPACE_WORKERS must be a positive integer, got `{v}`"))),
        };
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => {
            let mut f = File::create(path).map_err(|e| io_error(path, e))?;
            f.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn expand(args: &ExpandArgs) -> Result<(), CliError> {
    let data = Dataset::load_csv(&args.input, &args.response)?;
    let mains: Vec<&str> = args.mains.iter().map(|s| s.trim()).collect();
    let expanded = data.expand_design(&mains)?;
    for w in expanded.warnings() {
        eprintln!("warning: {w}");
    }
    let path = &args.out;
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut header = vec![expanded.response().to_string()];
    header.extend(expanded.names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..expanded.n() {
        let mut row = vec![expanded.y()[i].to_string()];
        row.extend((0..expanded.p()).map(|j| expanded.column(j)[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_error(path, e))?;
    eprintln!("wrote {} candidate columns to {}", expanded.p(), path.display());
    Ok(())
}

fn sampler_config(
    iterations: usize,
    burn: usize,
    thin: usize,
    seed: u64,
    start: Start,
    prior: GPriorSpec,
    sse_check_every: usize,
) -> Result<SamplerConfig, CliError> {
    let mut cfg = SamplerConfig::new(iterations, prior).with_seed(seed);
    cfg.burn = burn;
    cfg.thin = thin;
    cfg.start = start;
    cfg.sse_check_every = sse_check_every;
    cfg.validate()?;
    Ok(cfg)
}

fn diagnostics_of(trace: &ChainTrace) -> Diagnostics {
    let checks = &trace.meta.sse_checks;
    Diagnostics {
        g_acceptance: trace.meta.g_acceptance,
        excluded: trace.meta.excluded_draws as u64,
        sse_checks: checks.len(),
        sse_max_rel_error: (!checks.is_empty()).then(|| checks.iter().map(|c| c.rel_error).fold(0.0, f64::max)),
    }
}

pub fn gibbs(args: &GibbsArgs) -> Result<(), CliError> {
    let mut timer = Timer::new();
    let data = timer.time("load", || load(&args.data))?;
    let prior = prior_from(&args.prior, data.n())?;
    let (start, start_name) = start_of(args.start);
    let cfg = sampler_config(args.iterations, args.burn, args.thin, args.seed, start, prior, args.sse_check_every)?;
    let trace = timer.time("sample", || run_chain(&data, &cfg))?;
    if let Some(path) = &args.trace {
        timer.time("trace", || write_trace(&trace, path))?;
    }
    let (empirical, renormalized) = timer.time("estimate", || -> Result<_, CliError> {
        let empirical = summarize_empirical(&trace, &prior, args.top_k)?;
        let renormalized = summarize_renormalized(&distinct_models(&trace), &prior, args.top_k)?;
        Ok((empirical, renormalized))
    })?;

    let (prior_name, g) = prior_echo(&prior);
    let names = data.names();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: "gibbs".into(),
        dataset: DatasetInfo::new(&args.data.data.display().to_string(), &data, dataset_digest(&data)),
        config: ConfigEcho {
            prior: prior_name,
            g,
            model_prior: "uniform".into(),
            top_k: args.top_k,
            iterations: Some(args.iterations),
            burn: Some(args.burn),
            thin: Some(args.thin),
            seed: Some(args.seed),
            start: Some(start_name.into()),
            sse_check_every: Some(args.sse_check_every),
            trace: args.trace.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        },
        summary: Summary::new(&empirical, names, None),
        renormalized: Some(Summary::new(&renormalized, names, None)),
        exact: None,
        diagnostics: diagnostics_of(&trace),
        timing: timer.0,
    };
    emit(&report, args.out.as_deref())
}

pub fn exact(args: &ExactArgs) -> Result<(), CliError> {
    let mut timer = Timer::new();
    let data = timer.time("load", || load(&args.data))?;
    let prior = GPriorSpec::fixed(args.g.unwrap_or(data.n() as f64))?;
    let workers = resolve_workers(args.workers)?;
    let mut cfg = ExactConfig::new(prior).with_workers(workers).with_top_k(args.top_k);
    cfg.shard_bits = args.shard_bits;
    cfg.force = args.force;
    if let Some(bits) = args.shard_bits {
        if bits as usize > data.p() {
            return Err(CliError::Usage(format!("--shard-bits {bits} exceeds p = {}", data.p())));
        }
    }
    let result = timer.time("enumerate", || enumerate(&data, &cfg))?;
    let above = if args.rank_mpm {
        Some(timer.time("rank", || models_above(&data, &cfg, &result.mpm()))?)
    } else {
        None
    };
    let report = exact_report(args, &data, &result, above, workers, timer.0);
    emit(&report, args.out.as_deref())
}

fn exact_report(
    args: &ExactArgs,
    data: &Dataset,
    r: &ExactResult,
    above: Option<u64>,
    workers: usize,
    timing: Vec<Phase>,
) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        command: "exact".into(),
        dataset: DatasetInfo::new(&args.data.data.display().to_string(), data, dataset_digest(data)),
        config: ConfigEcho {
            prior: "fixed".into(),
            g: Some(r.g),
            model_prior: "uniform".into(),
            top_k: args.top_k,
            workers: Some(workers),
            shard_bits: args.shard_bits,
            force: Some(args.force),
            ..Default::default()
        },
        summary: Summary::new(&r.to_summary(), data.names(), Some(r.hpm.posterior)),
        renormalized: None,
        exact: Some(ExactInfo {
            log_norm_const: r.log_norm_const,
            log10_sum_bf: r.log10_sum_bf(),
            visited: r.visited,
            excluded_count: r.excluded_count,
            shard_count: r.shard_count,
            models_above_mpm: above,
        }),
        diagnostics: Diagnostics { excluded: r.excluded_count, ..Default::default() },
        timing,
    }
}

/// One run's estimates, as used for the cross-run statistics.
struct RunOutcome {
    row: RunRow,
    se: Option<Vec<f64>>,
}

fn outcome_row(
    method: &str,
    source: String,
    s: &PosteriorSummary,
    distinct: &[RankedModel],
    reference: Option<&ModelIndex>,
) -> RunOutcome {
    let se: Option<Vec<f64>> = s.inclusion.iter().map(|e| e.se).collect();
    let row = RunRow {
        method: method.into(),
        source,
        inclusion: s.inclusion.iter().map(|e| e.value).collect(),
        se: se.clone(),
        hpm: s.hpm.model.to_hex(),
        mpm: s.mpm.to_hex(),
        mass_log10: s.mass_log10,
        distinct_models: distinct.len(),
        hpm_visited: reference.map(|hpm| distinct.iter().any(|r| &r.model == hpm)),
    };
    RunOutcome { row, se }
}

fn method_stats(method: &str, outcomes: &[&RunOutcome], names: &[String], reference: Option<&RunReport>) -> MethodStats {
    let p = names.len();
    let runs = outcomes.len();
    let variables = (0..p)
        .map(|l| {
            let xs: Vec<f64> = outcomes.iter().map(|o| o.row.inclusion[l]).collect();
            let ms = mean_sd(&xs);
            let ses: Option<Vec<f64>> = outcomes.iter().map(|o| o.se.as_ref().map(|s| s[l])).collect();
            VariableStats {
                name: names[l].clone(),
                mean_estimate: ms.mean,
                mean_se: ses.map(|s| s.iter().sum::<f64>() / s.len() as f64),
                observed_sd: ms.sd,
                exact: reference.map(|r| r.summary.inclusion[l].value),
            }
        })
        .collect();
    let masses: Vec<f64> = outcomes.iter().map(|o| o.row.mass_log10).collect();
    let count = |f: &dyn Fn(&RunOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    MethodStats {
        method: method.into(),
        runs,
        variables,
        mass_log10: mean_sd(&masses),
        hpm_hits: reference.map(|r| count(&|o| o.row.hpm == r.summary.hpm.mask)),
        mpm_hits: reference.map(|r| count(&|o| o.row.mpm == r.summary.mpm.mask)),
        hpm_visited: reference.map(|_| count(&|o| o.row.hpm_visited == Some(true))),
    }
}

fn read_reference(path: &Path, digest: &str) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let r: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: not a report: {e}", path.display())))?;
    if r.command != "exact" {
        return Err(CliError::Data(format!("{}: expected a report from `exact`, found `{}`", path.display(), r.command)));
    }
    if r.dataset.digest != digest {
        return Err(CliError::Data(format!(
            "{}: dataset digest {} does not match {}",
            path.display(),
            r.dataset.digest,
            digest
        )));
    }
    Ok(r)
}

/// Distinct models of an external visited-model file. With a fixed `g` the
/// Bayes factors are recomputed; otherwise the file's values are used.
fn external_models(data: &Dataset, path: &Path, prior: &GPriorSpec) -> Result<Vec<RankedModel>, CliError> {
    let records = read_trace(path, data.p())?;
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no models", path.display())));
    }
    let mut seen = std::collections::BTreeMap::new();
    for r in records {
        seen.entry(r.model).or_insert(r.log_bf);
    }
    Ok(seen
        .into_iter()
        .map(|(model, file_lbf)| {
            let log_bf = match prior.fixed_g() {
                Some(g) => log_bf_value(&FitState::for_model(data, &model), g),
                None => file_lbf,
            };
            RankedModel { model, log_bf }
        })
        .collect())
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let seeds: Vec<u64> = if args.seeds.is_empty() {
        (0..args.runs as u64).map(|r| derive_seed(args.seed, r)).collect()
    } else {
        args.seeds.clone()
    };
    if seeds.len() < 2 {
        return Err(CliError::Usage("compare needs at least 2 runs".into()));
    }
    let mut timer = Timer::new();
    let data = timer.time("load", || load(&args.data))?;
    let digest = dataset_digest(&data);
    let prior = prior_from(&args.prior, data.n())?;
    let (start, start_name) = start_of(args.start);
    let workers = resolve_workers(args.workers)?;
    let reference = args.exact.as_deref().map(|p| read_reference(p, &digest)).transpose()?;
    let ref_hpm = reference
        .as_ref()
        .map(|r| {
            ModelIndex::from_hex(data.p(), &r.summary.hpm.mask)
                .ok_or_else(|| CliError::Data(format!("bad HPM mask `{}` in reference", r.summary.hpm.mask)))
        })
        .transpose()?;

    let mut methods: Vec<MethodArg> = Vec::new();
    for &m in &args.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let configs: Vec<SamplerConfig> = seeds
        .iter()
        .map(|&seed| sampler_config(args.iterations, 0, 1, seed, start, prior, 0))
        .collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let per_run: Vec<Vec<(MethodArg, RunOutcome)>> = timer.time("runs", || {
        pool.install(|| {
            configs
                .par_iter()
                .map(|cfg| -> Result<_, CliError> {
                    let trace = run_chain(&data, cfg)?;
                    let distinct = distinct_models(&trace);
                    let source = format!("seed:{}", cfg.seed);
                    let mut out = Vec::new();
                    for &m in &methods {
                        let (name, s) = match m {
                            MethodArg::Gibbs => ("empirical", summarize_empirical(&trace, &prior, args.top_k)?),
                            MethodArg::Renormalized => {
                                ("renormalized", summarize_renormalized(&distinct, &prior, args.top_k)?)
                            }
                        };
                        out.push((m, outcome_row(name, source.clone(), &s, &distinct, ref_hpm.as_ref())));
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>, _>>()
        })
    })?;

    let external: Vec<RunOutcome> = timer.time("external", || {
        args.visited
            .iter()
            .map(|path| -> Result<_, CliError> {
                let distinct = external_models(&data, path, &prior)?;
                let s = summarize_renormalized(&distinct, &prior, args.top_k)?;
                Ok(outcome_row("external", path.display().to_string(), &s, &distinct, ref_hpm.as_ref()))
            })
            .collect::<Result<_, _>>()
    })?;

    let names = data.names();
    let mut stats = Vec::new();
    for &m in &methods {
        let outs: Vec<&RunOutcome> = per_run.iter().flatten().filter(|(k, _)| *k == m).map(|(_, o)| o).collect();
        let name = match m {
            MethodArg::Gibbs => "empirical",
            MethodArg::Renormalized => "renormalized",
        };
        stats.push(method_stats(name, &outs, names, reference.as_ref()));
    }
    if !external.is_empty() {
        let outs: Vec<&RunOutcome> = external.iter().collect();
        stats.push(method_stats("external", &outs, names, reference.as_ref()));
    }

    let (prior_name, g) = prior_echo(&prior);
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare".into(),
        dataset: DatasetInfo::new(&args.data.data.display().to_string(), &data, digest),
        config: ConfigEcho {
            prior: prior_name,
            g,
            model_prior: "uniform".into(),
            top_k: args.top_k,
            iterations: Some(args.iterations),
            seed: args.seeds.is_empty().then_some(args.seed),
            start: Some(start_name.into()),
            workers: Some(workers),
            runs: Some(seeds.len()),
            seeds: Some(seeds.clone()),
            methods: Some(stats.iter().map(|s| s.method.clone()).collect()),
            exact: args.exact.as_ref().map(|p| p.display().to_string()),
            visited: (!args.visited.is_empty()).then(|| args.visited.iter().map(|p| p.display().to_string()).collect()),
            ..Default::default()
        },
        reference: reference.as_ref().zip(args.exact.as_ref()).map(|(r, path)| Reference {
            path: path.display().to_string(),
            log10_sum_bf: r.exact.as_ref().map_or(f64::NAN, |e| e.log10_sum_bf),
            hpm: ModelRef { mask: r.summary.hpm.mask.clone(), variables: r.summary.hpm.variables.clone() },
            mpm: r.summary.mpm.clone(),
        }),
        methods: stats,
        runs: per_run.into_iter().flatten().map(|(_, o)| o.row).chain(external.into_iter().map(|o| o.row)).collect(),
        timing: timer.0,
    };
    emit(&report, args.out.as_deref())
}
