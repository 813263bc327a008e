use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gpcid_core::basis::PolynomialFamily;
use gpcid_core::density::{fit_gaussian, fit_maxent, maxent_support, Density, MaxEntOptions};
use gpcid_core::gpc::{CacheOptions, InnerProductCache, MomentVector};
use gpcid_core::mle::{
    benchmark_mae, camelback_design, clutch_design, draw_observations, identify, reference_log_likelihoods,
    AlphaBounds, BenchmarkConfig, ExperimentSet, LikelihoodEngine, SyntheticTruth,
};
use gpcid_core::models::{ClutchModel, ExperimentConfig, LoadLevel};
use gpcid_core::parallel::run_with_workers;
use gpcid_core::transform::InputProbabilityModel;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{read_json, write_json, write_text, MethodKind, ModelKind, RunConfig};
use crate::error::{CliResult, Failure};
use crate::propagate::{self, moment_caches, DemoSettings};

#[derive(Debug, Parser)]
#[command(name = "gpcid", version, about = "Polynomial chaos propagation, density fitting and input identification")]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for the parallel sections.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Camelback demonstration: coefficients, moment errors, fitted densities and EMD.
    Propagate(PropagateArgs),
    /// Build one inner-product cache file.
    CacheBuild(CacheBuildArgs),
    /// Fit a Gaussian or MaxEnt density to a moment vector.
    FitDensity(FitDensityArgs),
    /// Simulate one clutch engagement and write its trace.
    SimulateClutch(SimulateArgs),
    /// Draw a synthetic experiment set from a known input model.
    GenSynthetic(SyntheticArgs),
    /// Maximum-likelihood identification of the input model.
    Identify(IdentifyArgs),
    /// Log-likelihood MAE of gPC against MC and qMC sample counts.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PropagateArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<u32>,
    #[arg(long)]
    pub reference_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `io.out_dir`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CacheBuildArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: u32,
    /// One family for all inputs, or a comma-separated list of `n`.
    #[arg(long, default_value = "hermite")]
    pub family: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Gauss,
    Maxent,
}

#[derive(Debug, Args, Serialize)]
pub struct FitDensityArgs {
    /// JSON array of raw moments, or an object with a `moments` array.
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long, value_enum, default_value = "maxent")]
    pub method: FitMethod,
    /// Support `lo,hi`; defaults to mean ± 10 sd.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub support: Option<Vec<f64>>,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Sampled `y,pdf` curve.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Fitted coefficients; defaults to the curve path with a `.json` extension.
    #[arg(long)]
    #[serde(skip)]
    pub lambda_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.15)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.4)]
    pub u0: f64,
    #[arg(long, default_value_t = 0.2)]
    pub du: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub omega: f64,
    #[arg(long, default_value = "low")]
    pub load: String,
    #[arg(long, default_value_t = 1.0)]
    pub x1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x2: f64,
    /// Wet-clutch parameter JSON; overrides `model.params`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SyntheticArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, default_value_t = 20)]
    pub experiments: usize,
    /// Input model JSON; a per-model default is used when absent.
    #[arg(long)]
    pub alpha: Option<PathBuf>,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub truth: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub experiments: PathBuf,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<u32>,
    /// Sample count for `mc` and `qmc`.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bounds: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub experiments: PathBuf,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Input model JSON, or the truth file written by `gen-synthetic`.
    #[arg(long)]
    pub alpha: PathBuf,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<u32>,
    #[arg(long)]
    pub reference_samples: Option<usize>,
    #[arg(long)]
    pub reference_seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

fn summary_header(config: &RunConfig, command: &str, args: &impl Serialize) -> serde_json::Value {
    json!({
        "command": command,
        "version": gpcid_core::VERSION,
        "config_hash": config.hash(command, args),
    })
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(a), serde_json::Value::Object(b)) = (base.as_object_mut(), extra) {
        a.extend(b);
    }
    base
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{} does not exist", path.display())))
    }
}

fn read_experiments(path: &Path) -> CliResult<ExperimentSet> {
    require_file(path)?;
    let file = std::fs::File::open(path).map_err(|e| Failure::io(path, e))?;
    ExperimentSet::read_csv(file).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Parses and runs a full command line, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    run_with_workers(cli.workers, move || dispatch(cli.command, config))?
}

fn dispatch(command: Command, config: RunConfig) -> CliResult<()> {
    match command {
        Command::Propagate(a) => run_propagate(a, config),
        Command::CacheBuild(a) => run_cache_build(a, config),
        Command::FitDensity(a) => run_fit_density(a, config),
        Command::SimulateClutch(a) => run_simulate(a, config),
        Command::GenSynthetic(a) => run_synthetic(a, config),
        Command::Identify(a) => run_identify(a, config),
        Command::Benchmark(a) => run_benchmark(a, config),
    }
}

fn run_propagate(a: PropagateArgs, mut config: RunConfig) -> CliResult<()> {
    if config.model.name != ModelKind::Camelback {
        return Err(Failure::usage("propagate supports the camelback model only"));
    }
    if let Some(d) = a.d {
        config.gpc.degree = d;
    }
    if a.q.is_some() {
        config.gpc.nodes = a.q;
    }
    if let Some(m) = a.m {
        config.gpc.max_moment = m;
    }
    if let Some(s) = a.reference_samples {
        config.density.reference_samples = s;
    }
    if let Some(s) = a.seed {
        config.density.reference_seed = s;
    }
    config.validate()?;
    let out = a
        .out
        .clone()
        .or_else(|| config.io.out_dir.clone())
        .ok_or_else(|| Failure::usage("propagate needs --out or io.out_dir"))?;
    let settings = DemoSettings {
        degree: config.gpc.degree,
        nodes: config.gpc.nodes,
        max_moment: config.gpc.max_moment,
        reference_samples: config.density.reference_samples,
        reference_seed: config.density.reference_seed,
        emd_grid: config.density.emd_grid,
        curve_points: config.density.curve_points,
        cache_dir: config.cache_dir(),
    };
    let report = propagate::run(&settings)?;
    write_text(&out.join("coefficients.csv"), &report.coefficients_csv())?;
    write_text(&out.join("moments.csv"), &report.moments_csv())?;
    write_text(&out.join("densities.csv"), &report.curves_csv())?;
    let summary = merge(
        summary_header(&config, "propagate", &a),
        json!({
            "report": report,
            "emd_gaussian": report.from_gpc.emd_gaussian,
            "emd_maxent": report.from_gpc.emd_maxent,
            "maxent_beats_gaussian": report.maxent_beats_gaussian(),
        }),
    );
    write_json(&out.join("summary.json"), &summary)
}

fn parse_families(spec: &str, n: usize) -> CliResult<Vec<PolynomialFamily>> {
    let parsed = spec
        .split(',')
        .map(|s| s.parse::<PolynomialFamily>())
        .collect::<gpcid_core::Result<Vec<_>>>()
        .map_err(|e| Failure::usage(format!("--family: {e}")))?;
    match parsed.len() {
        1 => Ok(vec![parsed[0]; n]),
        k if k == n => Ok(parsed),
        k => Err(Failure::usage(format!("--family lists {k} families for n = {n}"))),
    }
}

fn run_cache_build(a: CacheBuildArgs, config: RunConfig) -> CliResult<()> {
    if a.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let families = parse_families(&a.family, a.n)?;
    let mut options = CacheOptions::default();
    if let Some(tol) = a.tol {
        options.tol = tol;
    }
    let cache = InnerProductCache::build(&families, a.d, a.m, &options)?;
    cache.write(&a.out)?;
    let summary = merge(
        summary_header(&config, "cache-build", &a),
        json!({
            "path": a.out,
            "candidates": cache.candidates().to_string(),
            "entries": cache.len(),
        }),
    );
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MomentFile {
    Bare(Vec<f64>),
    Object { moments: Vec<f64> },
}

fn run_fit_density(a: FitDensityArgs, config: RunConfig) -> CliResult<()> {
    let raw = match read_json::<MomentFile>(&a.moments)? {
        MomentFile::Bare(v) | MomentFile::Object { moments: v } => v,
    };
    let moments = MomentVector::new(raw).map_err(|e| Failure::usage(format!("{}: {e}", a.moments.display())))?;
    let support = match a.support.as_deref() {
        Some(&[lo, hi]) => (lo, hi),
        Some(_) => return Err(Failure::usage("--support takes two values lo,hi")),
        None => maxent_support(&moments, &[])?,
    };
    if a.points < 2 {
        return Err(Failure::usage("--points must be at least 2"));
    }
    let grid = |pdf: &dyn Fn(f64) -> f64| {
        let mut s = String::from("y,pdf\n");
        for k in 0..a.points {
            let y = support.0 + (support.1 - support.0) * k as f64 / (a.points - 1) as f64;
            s.push_str(&format!("{y:e},{:e}\n", pdf(y)));
        }
        s
    };
    let (curve, fitted) = match a.method {
        FitMethod::Gauss => {
            let g = fit_gaussian(&moments)?;
            (grid(&|y| g.pdf(y)), json!({ "mean": g.mean, "sd": g.sd }))
        }
        FitMethod::Maxent => {
            let d = fit_maxent(&moments, support, None, &MaxEntOptions::default())?;
            (
                grid(&|y| d.pdf(y)),
                json!({
                    "lambda": d.lambda(),
                    "shift": d.shift(),
                    "scale": d.scale(),
                    "support": d.support(),
                    "iterations": d.iterations(),
                    "gradient_norm": d.gradient_norm(),
                }),
            )
        }
    };
    write_text(&a.out, &curve)?;
    let lambda_out = a.lambda_out.clone().unwrap_or_else(|| a.out.with_extension("json"));
    let summary = merge(summary_header(&config, "fit-density", &a), json!({ "method": a.method, "fit": fitted }));
    write_json(&lambda_out, &summary)
}

fn run_simulate(a: SimulateArgs, mut config: RunConfig) -> CliResult<()> {
    if let Some(p) = &a.params {
        require_file(p)?;
        config.model.params = Some(p.clone());
    }
    if let Some(step) = a.step {
        config.model.simulator.step = step;
    }
    let load: LoadLevel = a.load.parse().map_err(|e| Failure::usage(format!("--load: {e}")))?;
    let experiment = ExperimentConfig {
        id: 1,
        dt: a.dt,
        u0: a.u0,
        du: a.du,
        omega_m_rpm: a.omega,
        load,
    };
    experiment.validate()?;
    let model = ClutchModel::new(config.clutch_params()?, config.model.simulator)?;
    let trace = model.trace(&experiment, &[a.x1, a.x2])?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_text(&a.out, &String::from_utf8(buf).expect("trace CSV is UTF-8"))?;
    let summary = merge(
        summary_header(&config, "simulate-clutch", &a),
        json!({ "shifting_time": trace.shifting_time, "points": trace.points.len() }),
    );
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

/// Input model used by `gen-synthetic` when none is given.
pub fn default_truth(model: ModelKind) -> InputProbabilityModel {
    match model {
        ModelKind::Camelback => InputProbabilityModel::new(vec![2.0, 1.0], vec![0.1, 0.05], vec![1.0, 0.5], vec![3.0, 1.5]),
        ModelKind::Clutch => InputProbabilityModel::new(vec![1.0, 1.0], vec![0.05, 0.05], vec![0.8, 0.8], vec![1.2, 1.2]),
    }
    .expect("default input models are valid")
}

fn run_synthetic(a: SyntheticArgs, mut config: RunConfig) -> CliResult<()> {
    if let Some(m) = a.model {
        config.model.name = m;
    }
    let kind = config.model.name;
    let alpha = match &a.alpha {
        Some(p) => read_json::<InputProbabilityModel>(p)?,
        None => default_truth(kind),
    };
    let model = config.forward_model()?;
    if alpha.dimension() != model.input_dimension() {
        return Err(Failure::usage(format!(
            "input model has {} components, {kind} needs {}",
            alpha.dimension(),
            model.input_dimension()
        )));
    }
    let design = match kind {
        ModelKind::Camelback => camelback_design(a.experiments, [alpha.mu()[0], alpha.mu()[1]]),
        ModelKind::Clutch => clutch_design(a.experiments),
    };
    let set = draw_observations(&*model, &design, &alpha, a.seed)?;
    let mut buf = Vec::new();
    set.write_csv(&mut buf)?;
    write_text(&a.out, &String::from_utf8(buf).expect("experiment CSV is UTF-8"))?;
    let truth = SyntheticTruth {
        model: kind.to_string(),
        alpha,
        seed: a.seed,
        experiments: set.len(),
    };
    let summary = merge(
        summary_header(&config, "gen-synthetic", &a),
        serde_json::to_value(&truth).expect("truth serializes"),
    );
    write_json(&a.truth, &summary)
}

fn build_engine(config: &RunConfig) -> CliResult<LikelihoodEngine> {
    let model = config.forward_model()?;
    let method = config.method();
    let settings = config.gpc.settings();
    let engine = if method.is_gpc() && method.moment_order() > 2 {
        let families = vec![PolynomialFamily::Hermite; model.input_dimension()];
        let caches = moment_caches(&families, settings.degree, method.moment_order(), config.cache_dir().as_deref())?;
        LikelihoodEngine::with_caches(model, method, settings, caches)?
    } else {
        LikelihoodEngine::new(model, method, settings)?
    };
    Ok(engine)
}

fn apply_gpc_flags(config: &mut RunConfig, d: Option<usize>, q: Option<usize>, m: Option<u32>) {
    if let Some(d) = d {
        config.gpc.degree = d;
    }
    if q.is_some() {
        config.gpc.nodes = q;
    }
    if let Some(m) = m {
        config.gpc.max_moment = m;
    }
}

fn run_identify(a: IdentifyArgs, mut config: RunConfig) -> CliResult<()> {
    if let Some(m) = a.model {
        config.model.name = m;
    }
    if let Some(m) = a.method {
        config.density.method = m;
    }
    apply_gpc_flags(&mut config, a.d, a.q, a.m);
    if let Some(s) = a.samples {
        config.density.samples = s;
    }
    if let Some(p) = a.pop {
        config.optimizer.population = p;
    }
    if let Some(g) = a.gens {
        config.optimizer.generations = g;
    }
    if let Some(s) = a.seed {
        config.optimizer.seed = s;
    }
    config.validate()?;
    let data = read_experiments(&a.experiments)?;
    let bounds: AlphaBounds = read_json(&a.bounds)?;
    bounds.validate().map_err(|e| Failure::usage(format!("{}: {e}", a.bounds.display())))?;
    let engine = build_engine(&config)?;
    let r = identify(&engine, &data, &bounds, &config.optimizer)?;
    let summary = merge(
        summary_header(&config, "identify", &a),
        json!({
            "model": config.model.name,
            "method": engine.method().to_string(),
            "experiments": data.len(),
            "alpha": r.alpha,
            "log_likelihood": r.log_likelihood,
            "converged": r.converged,
            "likelihood_evaluations": r.likelihood_evaluations,
            "model_evaluations": r.model_evaluations,
            "fallbacks": r.at_optimum.fallbacks(),
            "failures": r.at_optimum.failures(),
            "per_experiment": r.at_optimum.per_experiment,
            "trace": r.trace,
        }),
    );
    write_json(&a.out, &summary)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ReferenceFile {
    key: String,
    values: Vec<f64>,
}

fn read_alpha(path: &Path) -> CliResult<InputProbabilityModel> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("alpha").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn run_benchmark(a: BenchmarkArgs, mut config: RunConfig) -> CliResult<()> {
    if let Some(m) = a.model {
        config.model.name = m;
    }
    apply_gpc_flags(&mut config, a.d, a.q, a.m);
    if let Some(s) = a.reference_samples {
        config.density.reference_samples = s;
    }
    if let Some(s) = a.reference_seed {
        config.density.reference_seed = s;
    }
    config.validate()?;
    let data = read_experiments(&a.experiments)?;
    let alpha = read_alpha(&a.alpha)?;
    let model = config.forward_model()?;
    let bench = BenchmarkConfig {
        gpc: config.gpc.settings(),
        maxent_order: config.gpc.max_moment,
        reference_samples: config.density.reference_samples,
        reference_seed: config.density.reference_seed,
        mc_replicates: a.replicates,
        ..BenchmarkConfig::default()
    };

    // reference log-likelihoods are reused while their inputs are unchanged
    let key = config.hash("benchmark-reference", &(&alpha, &a.experiments, bench.reference_samples, bench.reference_seed));
    let ref_path = a.out.join("reference.json");
    let reference = match read_json::<ReferenceFile>(&ref_path) {
        Ok(f) if f.key == key && f.values.len() == data.len() => f.values,
        _ => {
            let values =
                reference_log_likelihoods(model.clone(), &alpha, &data, bench.reference_samples, bench.reference_seed)?;
            write_json(&ref_path, &ReferenceFile { key, values: values.clone() })?;
            values
        }
    };
    let families = vec![PolynomialFamily::Hermite; model.input_dimension()];
    let degree = bench.gpc.degree;
    let caches = moment_caches(&families, degree, bench.maxent_order, config.cache_dir().as_deref())?;
    let table = benchmark_mae(model, &alpha, &data, &reference, caches, &bench)?;
    write_text(&a.out.join("mae.csv"), &table.to_csv())?;
    write_text(&a.out.join("mae.dat"), &table.to_plot_data())?;
    let summary = merge(
        summary_header(&config, "benchmark", &a),
        json!({
            "experiments": data.len(),
            "gpc_evaluations": table.gpc_evaluations,
            "gpc_maxent_mae": table.gpc_maxent_mae,
            "gpc_gaussian_mae": table.gpc_gaussian_mae,
            "mc_match": table.mc_match,
            "qmc_match": table.qmc_match,
        }),
    );
    write_json(&a.out.join("summary.json"), &summary)
}
