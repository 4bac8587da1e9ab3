//! Experiment front-end: seeded run orchestration, metric aggregation and
//! CSV/JSON emission.
//!
//! Every command resolves one configuration, fans seeds out to independent
//! workers and writes a manifest next to its outputs. A manifest can be
//! passed back through `--config` to replay the run; in single-worker mode
//! (and, because tasks never share state, in multi-worker mode too) the
//! replay is byte-identical. CSV floats are printed in shortest
//! round-trip form so parsing a trace recovers the exact values.

use crate::agents::{
    load_actor_into, load_manifest, run_episode_centralized, run_episode_fixed,
    run_episode_multiagent, save_centralized_checkpoint, save_hma_checkpoint, stream, stream_id,
    AlgorithmKind, CentralizedAgent, CheckpointBundleError, EpisodeMetrics, EpisodeOptions,
    HeteroAgents, SlotRecord,
};
use crate::config::{ConfigError, NormBounds, SystemConfig};
use crate::environment::Environment;
use clap::{Args, Parser, Subcommand};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointBundleError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("selftest failed: {0}")]
    SelftestFailed(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything needed to reproduce a run, written next to every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub algorithm: Option<AlgorithmKind>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub code_version: String,
    pub timestamp_unix: u64,
    pub normalization: NormBounds,
    pub config: SystemConfig,
}

impl RunManifest {
    fn new(
        command: &str,
        algorithm: Option<AlgorithmKind>,
        seeds: &[u64],
        cfg: &SystemConfig,
    ) -> Self {
        Self {
            command: command.to_string(),
            algorithm,
            seeds: seeds.to_vec(),
            episodes: cfg.train.episodes,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            normalization: NormBounds::resolve(cfg),
            config: cfg.clone(),
        }
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(io_err(path))
    }
}

/// Loads either a plain TOML configuration or a previously written JSON
/// manifest; a manifest also supplies the run's algorithm and seeds.
pub fn load_config(path: &Path) -> Result<(SystemConfig, Option<RunManifest>), CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            ConfigError::Parse(format!("manifest {} did not parse: {e}", path.display()))
        })?;
        manifest.config.validate()?;
        Ok((manifest.config.clone(), Some(manifest)))
    } else {
        Ok((SystemConfig::from_toml_str(&text)?, None))
    }
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ConfigError> {
    let seeds: Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse::<u64>()).collect();
    let seeds = seeds.map_err(|e| ConfigError::Invalid {
        key: "seeds".to_string(),
        reason: format!("expected a comma-separated list of integers: {e}"),
    })?;
    if seeds.is_empty() {
        return Err(ConfigError::Invalid {
            key: "seeds".to_string(),
            reason: "at least one seed is required".to_string(),
        });
    }
    Ok(seeds)
}

// ---------------------------------------------------------------------------
// CSV helpers. Floats print in shortest round-trip decimal form.
// ---------------------------------------------------------------------------

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

const TRACE_HEADER: &str = "t,rate,energy,ratio,queue_local_mean,queue_edge";

fn trace_rows(trace: &[SlotRecord]) -> Vec<String> {
    trace
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.t, r.throughput, r.energy, r.ratio, r.queue_local_mean, r.queue_edge
            )
        })
        .collect()
}

const TRAIN_HEADER: &str =
    "episode,seed,sum_reward,mean_ratio,final_ratio,mean_queue_local,mean_queue_edge";

#[derive(Debug, Clone)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub sum_reward: f64,
    pub mean_ratio: f64,
    pub final_ratio: f64,
    pub mean_queue_local: f64,
    pub mean_queue_edge: f64,
}

impl EpisodeRow {
    fn from_metrics(episode: usize, seed: u64, m: &EpisodeMetrics) -> Self {
        Self {
            episode,
            seed,
            sum_reward: m.sum_reward,
            mean_ratio: m.mean_ratio,
            final_ratio: m.final_ratio,
            mean_queue_local: m.mean_queue_local,
            mean_queue_edge: m.mean_queue_edge,
        }
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.seed,
            self.sum_reward,
            self.mean_ratio,
            self.final_ratio,
            self.mean_queue_local,
            self.mean_queue_edge
        )
    }
}

/// Least-squares slope of `ys` against the slot index.
pub fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        cov += dx * (y - y_mean);
        var += dx * dx;
    }
    cov / var
}

/// Queue-growth statistic over the last third of a trace: the
/// least-squares slope of the queue length, in bits per slot.
pub fn queue_slope(trace: &[SlotRecord], edge: bool) -> f64 {
    let start = trace.len() - trace.len() / 3;
    let ys: Vec<f64> = trace[start..]
        .iter()
        .map(|r| if edge { r.queue_edge } else { r.queue_local_mean })
        .collect();
    least_squares_slope(&ys)
}

/// Growth threshold under which a queue counts as stable: one percent of
/// the mean per-slot arrivals.
pub fn stability_threshold(cfg: &SystemConfig) -> f64 {
    0.01 * cfg.system.zeta_k * cfg.system.task_bits
}

// ---------------------------------------------------------------------------
// Seeded run tasks. One task trains (when the algorithm learns) and then
// evaluates one noise-free episode on fresh evaluation streams.
// ---------------------------------------------------------------------------

enum TrainedPolicy {
    Central(Box<CentralizedAgent>),
    Hetero(Box<HeteroAgents>),
    Fixed,
}

struct SeedRun {
    algorithm: AlgorithmKind,
    seed: u64,
    train_rows: Vec<EpisodeRow>,
    eval: EpisodeMetrics,
    policy: TrainedPolicy,
}

fn multiagent_streams(seed: u64, n: usize) -> (Vec<ChaCha12Rng>, Vec<ChaCha12Rng>) {
    let explore = (0..n)
        .map(|i| stream(seed, stream_id::AGENT_EXPLORE_BASE + i as u64))
        .collect();
    let sample = (0..n)
        .map(|i| stream(seed, stream_id::AGENT_SAMPLE_BASE + i as u64))
        .collect();
    (explore, sample)
}

fn run_seed(
    cfg: &SystemConfig,
    algorithm: AlgorithmKind,
    seed: u64,
    episodes: usize,
) -> Result<SeedRun, ConfigError> {
    let eff = algorithm.effective_cfg(cfg);
    let mut train_rows = Vec::new();
    let policy = match algorithm {
        AlgorithmKind::Hma => {
            let mut init = stream(seed, stream_id::INIT);
            let mut agents = HeteroAgents::new(&eff, &mut init)?;
            let mut env = Environment::new(eff.clone());
            env.seed_ratio_prior(cfg.ratio_prior(), cfg.train.ratio_warm_slots);
            let mut env_rng = stream(seed, stream_id::ENV);
            let n = agents.agent_count();
            let (mut explore_rngs, mut sample_rngs) = multiagent_streams(seed, n);
            let scripted = vec![None; n];
            for episode in 0..episodes {
                env.reset_carry_ratio();
                let metrics = run_episode_multiagent(
                    &mut env,
                    &mut agents,
                    &mut env_rng,
                    &mut explore_rngs,
                    &mut sample_rngs,
                    &EpisodeOptions::training(),
                    &scripted,
                );
                train_rows.push(EpisodeRow::from_metrics(episode, seed, &metrics));
            }
            TrainedPolicy::Hetero(Box::new(agents))
        }
        AlgorithmKind::AllOffloadRandomPhase => TrainedPolicy::Fixed,
        _ => {
            let mut init = stream(seed, stream_id::INIT);
            let mut agent = CentralizedAgent::new(cfg, algorithm, &mut init)?;
            let mut env = Environment::new(agent.cfg.clone());
            env.seed_ratio_prior(cfg.ratio_prior(), cfg.train.ratio_warm_slots);
            let mut env_rng = stream(seed, stream_id::ENV);
            let mut explore_rng = stream(seed, stream_id::EXPLORE);
            let mut sample_rng = stream(seed, stream_id::SAMPLE);
            let mut policy_rng = stream(seed, stream_id::POLICY);
            for episode in 0..episodes {
                env.reset_carry_ratio();
                let metrics = run_episode_centralized(
                    &mut env,
                    &mut agent,
                    &mut env_rng,
                    &mut explore_rng,
                    &mut sample_rng,
                    &mut policy_rng,
                    &EpisodeOptions::training(),
                );
                train_rows.push(EpisodeRow::from_metrics(episode, seed, &metrics));
            }
            TrainedPolicy::Central(Box::new(agent))
        }
    };
    let eval = evaluate_policy(cfg, &policy, algorithm, seed)?;
    Ok(SeedRun {
        algorithm,
        seed,
        train_rows,
        eval,
        policy,
    })
}

fn evaluate_policy(
    cfg: &SystemConfig,
    policy: &TrainedPolicy,
    algorithm: AlgorithmKind,
    seed: u64,
) -> Result<EpisodeMetrics, ConfigError> {
    let eff = algorithm.effective_cfg(cfg);
    let mut env = Environment::new(eff.clone());
    let mut env_rng = stream(seed, stream_id::EVAL_ENV);
    let mut policy_rng = stream(seed, stream_id::EVAL_POLICY);
    let options = EpisodeOptions::evaluation();
    Ok(match policy {
        TrainedPolicy::Central(agent) => {
            let mut agent = (**agent).clone();
            let mut explore_rng = stream(seed, stream_id::EVAL_POLICY + 1);
            let mut sample_rng = stream(seed, stream_id::EVAL_POLICY + 2);
            run_episode_centralized(
                &mut env,
                &mut agent,
                &mut env_rng,
                &mut explore_rng,
                &mut sample_rng,
                &mut policy_rng,
                &options,
            )
        }
        TrainedPolicy::Hetero(agents) => {
            let mut agents = (**agents).clone();
            let n = agents.agent_count();
            let (mut explore_rngs, mut sample_rngs) = multiagent_streams(seed, n);
            let scripted = vec![None; n];
            run_episode_multiagent(
                &mut env,
                &mut agents,
                &mut env_rng,
                &mut explore_rngs,
                &mut sample_rngs,
                &options,
                &scripted,
            )
        }
        TrainedPolicy::Fixed => {
            run_episode_fixed(&mut env, algorithm, &mut env_rng, &mut policy_rng, &options)
        }
    })
}

fn run_seeds_parallel(
    cfg: &SystemConfig,
    tasks: &[(AlgorithmKind, u64)],
    episodes: usize,
    workers: usize,
) -> Result<Vec<SeedRun>, CliError> {
    let results: Vec<Result<SeedRun, ConfigError>> = if workers <= 1 {
        tasks
            .iter()
            .map(|&(alg, seed)| run_seed(cfg, alg, seed, episodes))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(|| {
            tasks
                .par_iter()
                .map(|&(alg, seed)| run_seed(cfg, alg, seed, episodes))
                .collect()
        })
    };
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from)
}

/// Train one algorithm for the configured episode count, then evaluate a
/// noise-free episode; the programmatic core of `train` plus `evaluate`.
pub fn train_and_evaluate(
    cfg: &SystemConfig,
    algorithm: AlgorithmKind,
    seed: u64,
) -> Result<(Vec<EpisodeRow>, EpisodeMetrics), ConfigError> {
    let run = run_seed(cfg, algorithm, seed, cfg.train.episodes)?;
    Ok((run.train_rows, run.eval))
}

fn save_policy(out: &Path, run: &SeedRun) -> Result<(), CliError> {
    match &run.policy {
        TrainedPolicy::Central(agent) => save_centralized_checkpoint(out, agent, run.seed)?,
        TrainedPolicy::Hetero(agents) => save_hma_checkpoint(out, agents, run.seed)?,
        TrainedPolicy::Fixed => {}
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

pub fn cmd_train(
    cfg: &SystemConfig,
    algorithm: AlgorithmKind,
    seeds: &[u64],
    workers: usize,
    out: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let tasks: Vec<(AlgorithmKind, u64)> = seeds.iter().map(|&s| (algorithm, s)).collect();
    let runs = run_seeds_parallel(cfg, &tasks, cfg.train.episodes, workers)?;
    let mut rows = Vec::new();
    for run in &runs {
        save_policy(out, run)?;
        rows.extend(run.train_rows.iter().map(EpisodeRow::csv));
    }
    write_csv(
        &out.join(format!("train_{}.csv", algorithm.name())),
        TRAIN_HEADER,
        &rows,
    )?;
    RunManifest::new("train", Some(algorithm), seeds, cfg)
        .write(&out.join(format!("manifest_train_{}.json", algorithm.name())))?;
    Ok(())
}

pub fn cmd_evaluate(
    cfg: &SystemConfig,
    algorithm: AlgorithmKind,
    seeds: &[u64],
    checkpoints: &Path,
    out: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut summary_rows = Vec::new();
    for &seed in seeds {
        let policy = match algorithm {
            AlgorithmKind::AllOffloadRandomPhase => TrainedPolicy::Fixed,
            AlgorithmKind::Hma => {
                let manifest = load_manifest(checkpoints, algorithm, seed)?;
                let mut init = stream(seed, stream_id::INIT);
                let mut agents = HeteroAgents::new(&algorithm.effective_cfg(cfg), &mut init)?;
                for i in 0..manifest.agents.len() {
                    let slot = if i < agents.eds.len() {
                        &mut agents.eds[i]
                    } else {
                        &mut agents.bs
                    };
                    load_actor_into(checkpoints, &manifest, i, slot)?;
                }
                TrainedPolicy::Hetero(Box::new(agents))
            }
            _ => {
                let manifest = load_manifest(checkpoints, algorithm, seed)?;
                let mut init = stream(seed, stream_id::INIT);
                let mut agent = CentralizedAgent::new(cfg, algorithm, &mut init)?;
                load_actor_into(checkpoints, &manifest, 0, &mut agent.ddpg)?;
                TrainedPolicy::Central(Box::new(agent))
            }
        };
        let eval = evaluate_policy(cfg, &policy, algorithm, seed)?;
        write_csv(
            &out.join(format!("trace_{}_seed{}.csv", algorithm.name(), seed)),
            TRACE_HEADER,
            &trace_rows(&eval.trace),
        )?;
        summary_rows.push(format!(
            "{},{},{},{},{}",
            seed,
            eval.final_ratio,
            eval.trace.iter().map(|r| r.throughput).sum::<f64>() / eval.trace.len() as f64,
            queue_slope(&eval.trace, false),
            queue_slope(&eval.trace, true),
        ));
    }
    write_csv(
        &out.join(format!("summary_{}.csv", algorithm.name())),
        "seed,final_ratio,mean_throughput,queue_slope_local,queue_slope_edge",
        &summary_rows,
    )?;
    RunManifest::new("evaluate", Some(algorithm), seeds, cfg)
        .write(&out.join(format!("manifest_evaluate_{}.json", algorithm.name())))?;
    Ok(())
}

/// One benchmark algorithm's aggregated evaluation results.
#[derive(Debug, Clone)]
pub struct BenchAlgoSummary {
    pub algorithm: AlgorithmKind,
    pub irs_elements: usize,
    pub per_seed_final_ratio: Vec<f64>,
    pub mean_final_ratio: f64,
    pub mean_throughput: f64,
    pub queue_slope_local: f64,
    pub queue_slope_edge: f64,
    pub stable: bool,
}

/// Train (where applicable) and evaluate every algorithm under identical
/// seeds; write per-slot traces, per-algorithm training curves and the
/// comparison summary into `out` when given.
pub fn run_bench(
    cfg: &SystemConfig,
    seeds: &[u64],
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<BenchAlgoSummary>, CliError> {
    run_algorithms(cfg, &AlgorithmKind::ALL, seeds, workers, out)
}

/// [`run_bench`] restricted to a subset of algorithms.
pub fn run_algorithms(
    cfg: &SystemConfig,
    algorithms: &[AlgorithmKind],
    seeds: &[u64],
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<BenchAlgoSummary>, CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tasks = Vec::new();
    for &algorithm in algorithms {
        for &seed in seeds {
            tasks.push((algorithm, seed));
        }
    }
    let runs = run_seeds_parallel(cfg, &tasks, cfg.train.episodes, workers)?;

    let mut summaries = Vec::new();
    for &algorithm in algorithms {
        let algo_runs: Vec<&SeedRun> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
        let per_seed_final_ratio: Vec<f64> =
            algo_runs.iter().map(|r| r.eval.final_ratio).collect();
        let mean_final_ratio =
            per_seed_final_ratio.iter().sum::<f64>() / per_seed_final_ratio.len() as f64;
        let mean_throughput = algo_runs
            .iter()
            .map(|r| {
                r.eval.trace.iter().map(|s| s.throughput).sum::<f64>() / r.eval.trace.len() as f64
            })
            .sum::<f64>()
            / algo_runs.len() as f64;
        let queue_slope_local = algo_runs
            .iter()
            .map(|r| queue_slope(&r.eval.trace, false))
            .sum::<f64>()
            / algo_runs.len() as f64;
        let queue_slope_edge = algo_runs
            .iter()
            .map(|r| queue_slope(&r.eval.trace, true))
            .sum::<f64>()
            / algo_runs.len() as f64;
        let threshold = stability_threshold(cfg);
        summaries.push(BenchAlgoSummary {
            algorithm,
            irs_elements: algorithm.effective_cfg(cfg).system.m,
            per_seed_final_ratio,
            mean_final_ratio,
            mean_throughput,
            queue_slope_local,
            queue_slope_edge,
            stable: queue_slope_local <= threshold && queue_slope_edge <= threshold,
        });
    }

    if let Some(dir) = out {
        for run in &runs {
            save_policy(dir, run)?;
            write_csv(
                &dir.join(format!(
                    "trace_{}_seed{}.csv",
                    run.algorithm.name(),
                    run.seed
                )),
                TRACE_HEADER,
                &trace_rows(&run.eval.trace),
            )?;
        }
        for &algorithm in algorithms {
            if !algorithm.is_learning() {
                continue;
            }
            let rows: Vec<String> = runs
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .flat_map(|r| r.train_rows.iter().map(EpisodeRow::csv))
                .collect();
            write_csv(
                &dir.join(format!("train_{}.csv", algorithm.name())),
                TRAIN_HEADER,
                &rows,
            )?;
        }
        let summary_rows: Vec<String> = summaries
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{}",
                    s.algorithm.name(),
                    s.irs_elements,
                    s.mean_throughput,
                    s.mean_final_ratio,
                    s.queue_slope_local,
                    s.queue_slope_edge,
                    s.stable
                )
            })
            .collect();
        write_csv(
            &dir.join("bench_summary.csv"),
            "algorithm,irs_elements,mean_throughput,mean_final_ratio,queue_slope_local,queue_slope_edge,stable",
            &summary_rows,
        )?;
        RunManifest::new("bench", None, seeds, cfg).write(&dir.join("manifest_bench.json"))?;
    }
    Ok(summaries)
}

pub fn cmd_selftest() -> Result<(), CliError> {
    let reports = crate::selftest::run_all();
    let mut failed = Vec::new();
    for report in &reports {
        println!("{}", report.line());
        if !report.passed {
            failed.push(report.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelftestFailed(failed.join(", ")))
    }
}

// ---------------------------------------------------------------------------
// Argument parsing.
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "irsmec",
    version,
    about = "IRS-assisted NOMA edge-computing simulator and resource-allocation trainer"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one algorithm over a seed list and write checkpoints plus a
    /// per-episode training CSV.
    Train(RunArgs),
    /// Evaluate previously trained checkpoints for one noise-free episode
    /// per seed.
    Evaluate(EvaluateArgs),
    /// Train and evaluate every algorithm under identical seeds and emit
    /// the comparison table.
    Bench(BenchArgs),
    /// Run the invariant suites and print one verdict per suite.
    Selftest,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration TOML or a manifest JSON from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
    /// Output directory (defaults to $IRSMEC_OUT or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "lmiddpg")]
    algorithm: String,
    /// Parallel seed workers; 1 is fully sequential.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Override the configured episode count.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Directory holding the checkpoint bundles (defaults to the output
    /// directory).
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    episodes: Option<usize>,
}

fn default_out() -> PathBuf {
    std::env::var_os("IRSMEC_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

struct Resolved {
    cfg: SystemConfig,
    seeds: Vec<u64>,
    algorithm: Option<AlgorithmKind>,
}

fn resolve(
    config: Option<&PathBuf>,
    seeds: &str,
    episodes: Option<usize>,
) -> Result<Resolved, CliError> {
    let (mut cfg, manifest) = match config {
        Some(path) => load_config(path)?,
        None => (SystemConfig::default(), None),
    };
    if let Some(e) = episodes.or(manifest.as_ref().map(|m| m.episodes)) {
        cfg.train.episodes = e;
    }
    let seeds = match &manifest {
        Some(m) => m.seeds.clone(),
        None => parse_seeds(seeds)?,
    };
    Ok(Resolved {
        cfg,
        seeds,
        algorithm: manifest.and_then(|m| m.algorithm),
    })
}

pub fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(args) => {
            let resolved = resolve(args.config.as_ref(), &args.seeds, args.episodes)?;
            let algorithm = resolved
                .algorithm
                .map(Ok)
                .unwrap_or_else(|| AlgorithmKind::parse(&args.algorithm))?;
            let out = args.out.unwrap_or_else(default_out);
            cmd_train(&resolved.cfg, algorithm, &resolved.seeds, args.workers, &out)
        }
        Command::Evaluate(args) => {
            let resolved = resolve(args.run.config.as_ref(), &args.run.seeds, args.run.episodes)?;
            let algorithm = resolved
                .algorithm
                .map(Ok)
                .unwrap_or_else(|| AlgorithmKind::parse(&args.run.algorithm))?;
            let out = args.run.out.unwrap_or_else(default_out);
            let checkpoints = args.checkpoints.unwrap_or_else(|| out.clone());
            cmd_evaluate(&resolved.cfg, algorithm, &resolved.seeds, &checkpoints, &out)
        }
        Command::Bench(args) => {
            let resolved = resolve(args.config.as_ref(), &args.seeds, args.episodes)?;
            let out = args.out.unwrap_or_else(default_out);
            run_bench(&resolved.cfg, &resolved.seeds, args.workers, Some(&out)).map(|_| ())
        }
        Command::Selftest => cmd_selftest(),
    }
}
