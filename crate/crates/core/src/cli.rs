//! The `sdir` command line: load or generate models, run simulations,
//! compute spectra and bounds, run the minimizers, and emit machine-readable
//! results.
//!
//! Structured results are JSON (with the resolved config and library version
//! embedded), time series are CSV. All seeded commands are byte-reproducible:
//! nothing volatile (timestamps, wall-clock, absolute output paths) lands in
//! an artifact.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{sigma_lower_detailed, sigma_upper_detailed, BoundsError};
use crate::dynamics::{
    estimated_infection_detailed, monte_carlo_infection, run_mean_field, write_monte_carlo_csv,
    write_trajectory_csv, MeanFieldState, SigmaStatus,
};
use crate::linalg::LinalgError;
use crate::model::{
    delete_edges_checked, emit_model_document, generate_network, parse_edge_set_document,
    parse_model_document, EdgeSet, GeneratorSpec, MissingEdgePolicy, ModelError, NetworkModel,
    StarDirection, Topology, UniformRange,
};
use crate::optimize::{
    brute_force_with_cap, greedy, random_baseline, sandwich, GreedyOptions, HeuristicP0, Method,
    Objective, OptimizationResult, OptimizeError, DEFAULT_ENUMERATION_CAP,
};
use crate::spectral::{
    build_system_matrix, refine_q, select_q, spectral_radius, SpectralError, SystemMatrixKind,
};

/// Exit codes: 0 success (divergence verdicts included), 1 usage, 2 I/O,
/// 3 validation, 4 numeric failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Spectral(inner) => CliError::Numeric(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Bounds(inner) => inner.into(),
            OptimizeError::Spectral(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyArg {
    ErdosRenyi,
    StarOutward,
    StarInward,
    Path,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateMode {
    MeanField,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    GreedyUpper,
    GreedyLower,
    GreedySigma,
    Sandwich,
    BruteForce,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum P0Arg {
    Random,
    GreedySigma,
}

fn parse_range(text: &str) -> Result<UniformRange, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'lo,hi', got '{text}'"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad lower endpoint: {e}"))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad upper endpoint: {e}"))?;
    Ok(UniformRange::new(lo, hi))
}

#[derive(Debug, Parser)]
#[command(
    name = "sdir",
    version,
    about = "Discrete-time SDIR information diffusion: simulation, spectra, bounds, and edge-deletion minimization"
)]
struct Cli {
    /// Output directory for artifacts (env fallback: SDIR_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo trials and candidate scans
    /// (env fallback: SDIR_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    topology: TopologyArg,
    #[arg(long)]
    nodes: usize,
    /// Edge probability (erdos-renyi only).
    #[arg(long, default_value_t = 0.2)]
    edge_prob: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_range, default_value = "0.05,0.2")]
    beta: UniformRange,
    #[arg(long, value_parser = parse_range, default_value = "0.3,1.0")]
    alpha: UniformRange,
    #[arg(long, value_parser = parse_range, default_value = "0.05,0.3")]
    omega: UniformRange,
    #[arg(long, value_parser = parse_range, default_value = "0.3,0.6")]
    delta: UniformRange,
    #[arg(long, value_parser = parse_range, default_value = "0.4,0.7")]
    delta_prime: UniformRange,
    /// Nodes starting infected (x0 = 1).
    #[arg(long, default_value_t = 1)]
    seed_nodes: usize,
    /// Nodes starting delayable (y0 = 1).
    #[arg(long, default_value_t = 0)]
    delayed_seed_nodes: usize,
    /// File name of the generated model, under the output directory.
    #[arg(long, default_value = "model.json")]
    model_out: String,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a synthetic model file.
    Generate(GenerateArgs),
    /// Run the mean-field iteration or the stochastic Monte Carlo process.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        mode: SimulateMode,
        #[arg(long, default_value_t = crate::dynamics::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = crate::dynamics::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Spectral radii of the system matrices and the convergence verdict.
    Spectral {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = crate::spectral::DEFAULT_TOL)]
        tol: f64,
        /// Coordinate-descent refinement of q (off by default).
        #[arg(long)]
        refine_q: bool,
    },
    /// Lower bound, exact value, and upper bound of the infection amount for
    /// a deletion set.
    Bounds {
        #[arg(long)]
        model: PathBuf,
        /// Edge-set file (JSON list of [source, target] pairs); empty set if
        /// omitted.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, default_value_t = crate::dynamics::DEFAULT_TOL)]
        tol: f64,
    },
    /// Choose k edges to delete, minimizing the estimated infection amount.
    Minimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        k: usize,
        /// Candidate set: "all" or an edge-set file path.
        #[arg(long, default_value = "all")]
        candidates: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Heuristic for the sandwich's exact-objective candidate.
        #[arg(long, value_enum, default_value_t = P0Arg::Random)]
        p0: P0Arg,
        /// Disable lazy (priority-queue) marginal evaluation.
        #[arg(long)]
        no_lazy: bool,
        /// Recompute every candidate from scratch instead of using the
        /// rank-one cache.
        #[arg(long)]
        naive: bool,
        #[arg(long, default_value_t = crate::dynamics::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        enumeration_cap: Option<u128>,
    },
}

/// Fully resolved invocation. Serialized into every JSON artifact, minus
/// machine-local details (output directory, thread count) so identical
/// configurations produce byte-identical artifacts anywhere.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimulateMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<P0Arg>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_q: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lazy: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incremental: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<u128>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    fn base(command: &str, output_dir: PathBuf, threads: Option<usize>, tol: f64) -> Self {
        ExperimentConfig {
            command: command.to_string(),
            model: None,
            generator: None,
            model_out: None,
            mode: None,
            method: None,
            candidates: None,
            k: None,
            p0: None,
            tol,
            max_iter: None,
            trials: None,
            horizon: None,
            seed: None,
            refine_q: None,
            lazy: None,
            incremental: None,
            enumeration_cap: None,
            output_dir,
            threads,
        }
    }
}

/// Outcome of argument parsing: either a resolved config or help/version
/// text to print with a zero exit.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<ExperimentConfig>),
    Help(String),
}

fn require_readable(path: &Path) -> Result<(), CliError> {
    fs::metadata(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Resolves argv into a validated [`ExperimentConfig`]. Unknown flags and
/// missing arguments are usage errors; unreadable files are I/O errors;
/// `--help`/`--version` return [`Parsed::Help`] without side effects.
pub fn parse_cli<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Parsed::Help(e.to_string()))
                }
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };

    let output_dir = cli
        .out
        .or_else(|| std::env::var_os("SDIR_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let threads = cli.threads.or_else(|| {
        std::env::var("SDIR_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });

    let check_tol = |tol: f64| -> Result<f64, CliError> {
        if tol > 0.0 && tol.is_finite() {
            Ok(tol)
        } else {
            Err(CliError::Usage(format!(
                "tolerance must be positive, got {tol}"
            )))
        }
    };

    let config = match cli.command {
        Cmd::Generate(args) => {
            let topology = match args.topology {
                TopologyArg::ErdosRenyi => Topology::ErdosRenyi {
                    n: args.nodes,
                    p: args.edge_prob,
                },
                TopologyArg::StarOutward => Topology::Star {
                    n: args.nodes,
                    direction: StarDirection::Outward,
                },
                TopologyArg::StarInward => Topology::Star {
                    n: args.nodes,
                    direction: StarDirection::Inward,
                },
                TopologyArg::Path => Topology::Path { n: args.nodes },
                TopologyArg::Complete => Topology::Complete { n: args.nodes },
            };
            let mut config = ExperimentConfig::base(
                "generate",
                output_dir,
                threads,
                crate::dynamics::DEFAULT_TOL,
            );
            config.generator = Some(GeneratorSpec {
                topology,
                beta: args.beta,
                alpha: args.alpha,
                omega: args.omega,
                delta: args.delta,
                delta_prime: args.delta_prime,
                seed_nodes: args.seed_nodes,
                delayed_seed_nodes: args.delayed_seed_nodes,
            });
            config.seed = Some(args.seed);
            config.model_out = Some(args.model_out);
            config
        }
        Cmd::Simulate {
            model,
            mode,
            tol,
            max_iter,
            trials,
            horizon,
            seed,
        } => {
            require_readable(&model)?;
            let mut config =
                ExperimentConfig::base("simulate", output_dir, threads, check_tol(tol)?);
            config.model = Some(model.display().to_string());
            config.mode = Some(mode);
            config.max_iter = Some(max_iter);
            config.trials = Some(trials);
            config.horizon = Some(horizon);
            config.seed = Some(seed);
            config
        }
        Cmd::Spectral {
            model,
            tol,
            refine_q,
        } => {
            require_readable(&model)?;
            let mut config =
                ExperimentConfig::base("spectral", output_dir, threads, check_tol(tol)?);
            config.model = Some(model.display().to_string());
            config.refine_q = Some(refine_q);
            config
        }
        Cmd::Bounds { model, edges, tol } => {
            require_readable(&model)?;
            if let Some(edges) = &edges {
                require_readable(edges)?;
            }
            let mut config = ExperimentConfig::base("bounds", output_dir, threads, check_tol(tol)?);
            config.model = Some(model.display().to_string());
            config.candidates = edges.map(|p| p.display().to_string());
            config
        }
        Cmd::Minimize {
            model,
            method,
            k,
            candidates,
            seed,
            p0,
            no_lazy,
            naive,
            tol,
            enumeration_cap,
        } => {
            require_readable(&model)?;
            if candidates != "all" {
                require_readable(Path::new(&candidates))?;
            }
            let mut config =
                ExperimentConfig::base("minimize", output_dir, threads, check_tol(tol)?);
            config.model = Some(model.display().to_string());
            config.method = Some(method);
            config.k = Some(k);
            config.candidates = Some(candidates);
            config.seed = Some(seed);
            config.p0 = Some(p0);
            config.lazy = Some(!no_lazy);
            config.incremental = Some(!naive);
            config.enumeration_cap = enumeration_cap;
            config
        }
    };
    Ok(Parsed::Run(Box::new(config)))
}

#[derive(Debug)]
pub struct ExecutionOutput {
    /// The JSON payload, also printed to stdout.
    pub payload: serde_json::Value,
    /// Files written under the output directory.
    pub artifacts: Vec<PathBuf>,
}

fn sigma_json(value: f64) -> serde_json::Value {
    if value.is_finite() {
        serde_json::json!(value)
    } else {
        serde_json::json!("inf")
    }
}

fn load_model(config: &ExperimentConfig) -> Result<NetworkModel, CliError> {
    let path = config
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("no model path resolved".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    Ok(parse_model_document(&text)?)
}

fn load_deletion_set(
    config: &ExperimentConfig,
    model: &NetworkModel,
) -> Result<(EdgeSet, Vec<serde_json::Value>), CliError> {
    match &config.candidates {
        None => Ok((EdgeSet::new(), Vec::new())),
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            let set = parse_edge_set_document(&text)?;
            // Missing edges are skipped with a warning in the payload.
            let outcome = delete_edges_checked(model, &set, MissingEdgePolicy::Skip)?;
            let warnings = outcome
                .missing
                .iter()
                .map(|e| serde_json::json!({ "missing_edge": [e.source, e.target] }))
                .collect();
            Ok((set, warnings))
        }
    }
}

fn resolve_candidates(
    config: &ExperimentConfig,
    model: &NetworkModel,
) -> Result<EdgeSet, CliError> {
    match config.candidates.as_deref() {
        None | Some("all") => Ok(model.all_edges()),
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            Ok(parse_edge_set_document(&text)?)
        }
    }
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_json_artifact(
    dir: &Path,
    name: &str,
    payload: &serde_json::Value,
) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(payload)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_artifact(dir, name, text.as_bytes())
}

fn payload_header(config: &ExperimentConfig) -> serde_json::Value {
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    })
}

fn edges_json(edges: &[crate::model::Edge]) -> serde_json::Value {
    serde_json::json!(edges
        .iter()
        .map(|e| vec![e.source, e.target])
        .collect::<Vec<_>>())
}

fn optimization_json(result: &OptimizationResult) -> serde_json::Value {
    let mut value = serde_json::json!({
        "method": result.method.as_str(),
        "approximation_guarantee": result.method.has_guarantee(),
        "chosen": edges_json(&result.chosen.sorted()),
        "sigma": sigma_json(result.objective_sigma),
        "trace": result.trace.iter().map(|t| serde_json::json!({
            "edge": [t.edge.source, t.edge.target],
            "marginal": sigma_json(t.marginal),
            "objective_value": sigma_json(t.objective_value),
        })).collect::<Vec<_>>(),
    });
    if let Some(report) = &result.sandwich {
        let candidate = |c: &crate::optimize::CandidateOutcome| {
            serde_json::json!({
                "method": c.method.as_str(),
                "edges": edges_json(&c.edges),
                "sigma": sigma_json(c.sigma),
            })
        };
        value["sandwich"] = serde_json::json!({
            "lower": candidate(&report.lower),
            "heuristic": candidate(&report.heuristic),
            "upper": candidate(&report.upper),
            "selected": report.selected.as_str(),
            "ratio_audit": {
                "sigma_upper_empty": sigma_json(report.sigma_upper_empty),
                "sigma_lower_at_lower_set": sigma_json(report.sigma_lower_at_lower_set),
                "sigma_at_lower_set": sigma_json(report.lower.sigma),
                "guarantee_ratio_lower_route": report
                    .guarantee_ratio_lower_route
                    .map_or(serde_json::Value::Null, |r| serde_json::json!(r)),
            },
            "all_infinite": report.all_infinite,
        });
    }
    value
}

/// Runs a resolved config, writing artifacts under its output directory.
/// Divergence verdicts are successes; only infrastructure failures error.
pub fn execute_command(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    if let Some(threads) = config.threads {
        // Best effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match config.command.as_str() {
        "generate" => execute_generate(config),
        "simulate" => execute_simulate(config),
        "spectral" => execute_spectral(config),
        "bounds" => execute_bounds(config),
        "minimize" => execute_minimize(config),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

fn execute_generate(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    let spec = config
        .generator
        .as_ref()
        .ok_or_else(|| CliError::Usage("generate needs a generator spec".into()))?;
    let seed = config.seed.unwrap_or(0);
    let model = generate_network(spec, seed)?;
    let document = emit_model_document(&model);
    let name = config.model_out.as_deref().unwrap_or("model.json");
    let path = write_artifact(&config.output_dir, name, document.as_bytes())?;
    let mut payload = payload_header(config);
    payload["model_file"] = serde_json::json!(name);
    payload["n"] = serde_json::json!(model.n());
    payload["edge_count"] = serde_json::json!(model.edge_count());
    Ok(ExecutionOutput {
        payload,
        artifacts: vec![path],
    })
}

fn execute_simulate(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    let model = load_model(config)?;
    let mut payload = payload_header(config);
    let mut artifacts = Vec::new();
    match config.mode.expect("simulate always has a mode") {
        SimulateMode::MeanField => {
            let trajectory = run_mean_field(
                &model,
                MeanFieldState::from_model(&model),
                config.tol,
                config.max_iter.unwrap_or(crate::dynamics::DEFAULT_MAX_ITER),
            );
            let mut csv = Vec::new();
            write_trajectory_csv(&trajectory, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
            artifacts.push(write_artifact(&config.output_dir, "trajectory.csv", &csv)?);
            payload["result"] = serde_json::json!({
                "converged": trajectory.converged,
                "diverged": trajectory.diverged,
                "iterations": trajectory.iterations,
                "infection_amount": sigma_json(trajectory.infection_amount()),
            });
        }
        SimulateMode::MonteCarlo => {
            let summary = monte_carlo_infection(
                &model,
                config.trials.unwrap_or(10_000),
                config.horizon.unwrap_or(10_000),
                config.seed.unwrap_or(0),
            );
            let mut csv = Vec::new();
            write_monte_carlo_csv(&summary, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
            artifacts.push(write_artifact(&config.output_dir, "monte_carlo.csv", &csv)?);
            payload["result"] = serde_json::json!({
                "mean": summary.mean,
                "stderr": summary.stderr,
                "per_node_hit_rates": summary.per_node_hit_rates,
                "truncated_trials": summary.truncated_trials,
            });
        }
    }
    artifacts.push(write_json_artifact(
        &config.output_dir,
        "simulate.json",
        &payload,
    )?);
    Ok(ExecutionOutput { payload, artifacts })
}

fn execute_spectral(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    let model = load_model(config)?;
    let tol = config.tol;
    let q = select_q(&model).map_err(CliError::from)?;
    let rho_of =
        |kind: SystemMatrixKind, q: Option<&crate::spectral::QVector>| -> Result<f64, CliError> {
            let sys = build_system_matrix(&model, kind, q)?;
            Ok(spectral_radius(&sys.entries, tol)?)
        };
    let rho_m_sir = rho_of(SystemMatrixKind::MSir, None)?;
    let rho_m_q = rho_of(SystemMatrixKind::MOfQ, Some(&q))?;
    let rho_n = rho_of(SystemMatrixKind::N, None)?;
    let rho_block = rho_of(SystemMatrixKind::Block, None)?;
    // The q-weighted surrogate certifies mean-field convergence when its
    // radius is below 1.
    let verdict = if rho_m_q < 1.0 {
        "convergent"
    } else {
        "not-certified"
    };
    let mut payload = payload_header(config);
    payload["result"] = serde_json::json!({
        "rho_m_sir": rho_m_sir,
        "rho_m_q": rho_m_q,
        "rho_n": rho_n,
        "rho_block": rho_block,
        "q": q.as_slice(),
        "verdict": verdict,
    });
    if config.refine_q == Some(true) {
        let (refined, rho_refined) = refine_q(&model, &q, 3, tol)?;
        payload["result"]["refined_q"] = serde_json::json!({
            "q": refined.as_slice(),
            "rho": rho_refined,
        });
    }
    let artifact = write_json_artifact(&config.output_dir, "spectral.json", &payload)?;
    Ok(ExecutionOutput {
        payload,
        artifacts: vec![artifact],
    })
}

fn execute_bounds(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    let model = load_model(config)?;
    let (deletions, warnings) = load_deletion_set(config, &model)?;
    let q = select_q(&model).map_err(CliError::from)?;
    let upper = sigma_upper_detailed(&model, &deletions, &q)?;
    let lower = sigma_lower_detailed(&model, &deletions)?;
    let sigma = estimated_infection_detailed(&model, &deletions, config.tol);
    let mut payload = payload_header(config);
    payload["result"] = serde_json::json!({
        "deleted_edges": edges_json(&deletions.sorted()),
        "sigma_lower": sigma_json(lower.value),
        "sigma": sigma_json(sigma.value),
        "sigma_upper": sigma_json(upper.value),
        "rho_n": lower.rho,
        "rho_m_q": upper.rho,
        "sigma_status": sigma.status,
        "lower_valid": lower.value.is_finite(),
        "upper_valid": upper.value.is_finite(),
    });
    if matches!(sigma.status, SigmaStatus::Divergent { .. }) {
        payload["result"]["note"] =
            serde_json::json!("sigma is the +inf sentinel: the reduced dynamics diverge");
    }
    if !warnings.is_empty() {
        payload["warnings"] = serde_json::json!(warnings);
    }
    let artifact = write_json_artifact(&config.output_dir, "bounds.json", &payload)?;
    Ok(ExecutionOutput {
        payload,
        artifacts: vec![artifact],
    })
}

fn execute_minimize(config: &ExperimentConfig) -> Result<ExecutionOutput, CliError> {
    let model = load_model(config)?;
    let candidates = resolve_candidates(config, &model)?;
    let k = config.k.unwrap_or(0);
    let seed = config.seed.unwrap_or(0);
    let options = GreedyOptions {
        lazy: config.lazy.unwrap_or(true),
        incremental: config.incremental.unwrap_or(true),
        tol: config.tol,
    };
    let method = config.method.expect("minimize always has a method");
    let result = match method {
        MethodArg::GreedyUpper => greedy(Objective::SigmaUpper, &model, &candidates, k, &options)?,
        MethodArg::GreedyLower => greedy(Objective::SigmaLower, &model, &candidates, k, &options)?,
        MethodArg::GreedySigma => greedy(Objective::Sigma, &model, &candidates, k, &options)?,
        MethodArg::Sandwich => {
            let p0 = match config.p0.unwrap_or(P0Arg::Random) {
                P0Arg::Random => HeuristicP0::Random,
                P0Arg::GreedySigma => HeuristicP0::GreedySigma,
            };
            sandwich(&model, &candidates, k, p0, seed, &options)?
        }
        MethodArg::BruteForce => brute_force_with_cap(
            &model,
            &candidates,
            k,
            config.tol,
            config.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
        )?,
        MethodArg::Random => random_baseline(&model, &candidates, k, seed, config.tol)?,
    };
    debug_assert!(matches!(
        result.method,
        Method::GreedyUpper
            | Method::GreedyLower
            | Method::GreedySigma
            | Method::Sandwich
            | Method::BruteForce
            | Method::RandomBaseline
    ));
    let mut payload = payload_header(config);
    payload["result"] = optimization_json(&result);
    let artifact = write_json_artifact(&config.output_dir, "minimize.json", &payload)?;
    Ok(ExecutionOutput {
        payload,
        artifacts: vec![artifact],
    })
}

/// Full CLI entry point: parse, execute, print, map errors to exit codes.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_cli(argv) {
        Ok(Parsed::Run(config)) => config,
        Ok(Parsed::Help(text)) => {
            println!("{text}");
            return 0;
        }
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match execute_command(&config) {
        Ok(output) => {
            match serde_json::to_string_pretty(&output.payload) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("failed to render payload: {e}");
                    return 4;
                }
            }
            for artifact in &output.artifacts {
                eprintln!("wrote {}", artifact.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
