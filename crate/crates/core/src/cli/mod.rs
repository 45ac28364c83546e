//! Command-line orchestration: config resolution, subcommands, checkpoint
//! files, and run manifests.

pub mod checkpoint;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, load_into, save_checkpoint, Tensor, FORMAT_VERSION, MAGIC};
pub use manifest::{RunManifest, CONFIG_FILE, MANIFEST_FILE};

use crate::engine::{step_with, JointAction, StepPath, ACTION_DIM};
use crate::error::{Error, Result};
use crate::evalstat::{
    absolute_metric, evaluate, final_metric, format_table, read_evals, write_evals, ActorPolicy, EvalLog, StatReport,
    TTestKind, N_BOOT,
};
use crate::learner::{train, Actor, TrainConfig};
use crate::scenarios::{spawn, TaskKind, TaskSpec};

/// Environment variable naming the directory that receives run folders.
pub const OUTPUT_ROOT_VAR: &str = "PIC_OUTPUT_ROOT";

/// Resolves a config: defaults, then `key=value` lines from `file`, then
/// `flags`. Unknown keys and out-of-range values are errors.
pub fn parse_config(flags: &[(String, String)], file: Option<&Path>) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    &format!("{}:{}", path.display(), no + 1),
                    line,
                    "a `key=value` line",
                )
            })?;
            config.set(k.trim(), v.trim())?;
        }
    }
    for (k, v) in flags {
        config.set(k, v)?;
    }
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Parser)]
#[command(name = "pic", version, about = "MADDPG with a permutation invariant critic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train agents and write metrics, checkpoints, and a manifest.
    Train(TrainArgs),
    /// Re-evaluate the saved policies of a run.
    Evaluate(EvaluateArgs),
    /// Significance test of a candidate run (or seed set) against a baseline.
    Compare(CompareArgs),
    /// Step throughput of the vectorized and reference physics paths.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `key=value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory (default: $PIC_OUTPUT_ROOT/<task>_n<N>_<critic>_s<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override any config key, e.g. `--set episodes=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub n_agents: Option<String>,
    #[arg(long)]
    pub critic: Option<String>,
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub episodes: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl TrainArgs {
    fn flags(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::config("--set", s, "KEY=VALUE"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let named = [
            ("task", &self.task),
            ("n_agents", &self.n_agents),
            ("critic", &self.critic),
            ("graph", &self.graph),
            ("episodes", &self.episodes),
            ("gamma", &self.gamma),
            ("lr", &self.lr),
            ("batch_size", &self.batch_size),
            ("seed", &self.seed),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run directory containing a manifest.
    pub run: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the per-episode returns (CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run directory, or a directory of seed runs.
    pub candidate: PathBuf,
    pub baseline: PathBuf,
    /// Use Welch's unequal-variance test.
    #[arg(long)]
    pub welch: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `stats.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Agent counts to time.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 50, 100, 200])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

/// Exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        2
    } else {
        3
    }
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn default_run_dir(c: &TrainConfig) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(format!("{}_n{}_{}_s{}", c.task, c.n_agents, c.critic, c.seed))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = parse_config(&args.flags()?, args.config.as_deref())?;
    let dir = args.out.clone().unwrap_or_else(|| default_run_dir(&config));
    let m = train(&config, &dir)?;
    println!("run directory: {}", dir.display());
    println!("checkpoints:   {}", m.checkpoints.len());
    if let (Some(f), Some(a)) = (m.final_metric, m.absolute_metric) {
        println!("final metric:    {f:.4}");
        println!("absolute metric: {a:.4}");
    }
    Ok(())
}

/// Rebuilds the saved policies of a run, in training order.
pub fn load_policies(run: &Path) -> Result<(RunManifest, Vec<(usize, ActorPolicy)>)> {
    let m = RunManifest::read(run)?;
    let task = TaskSpec::new(m.config.task, m.config.n_agents)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    for (ep, file) in &m.checkpoints {
        let hidden = [m.config.hidden, m.config.hidden];
        let mut actors: Vec<Actor> = (0..task.n_agents)
            .map(|_| Actor::new(task.obs_dim(), ACTION_DIM, &hidden, &mut rng))
            .collect();
        let names: Vec<String> = (0..actors.len()).map(|i| format!("agent{i}")).collect();
        let mut sets: Vec<(&str, &mut crate::numerics::ParamSet)> = names
            .iter()
            .map(String::as_str)
            .zip(actors.iter_mut().map(|a| &mut a.params))
            .collect();
        load_into(&run.join(file), &mut sets)?;
        out.push((*ep, ActorPolicy { actors }));
    }
    Ok((m, out))
}

/// Evaluates every checkpoint of a run with noise-free rollouts.
pub fn evaluate_run(run: &Path, episodes: usize, seed: u64) -> Result<EvalLog> {
    let (m, policies) = load_policies(run)?;
    let task = TaskSpec::new(m.config.task, m.config.n_agents)?;
    let mut log = EvalLog::new();
    for (ep, policy) in &policies {
        log.push(*ep, evaluate(policy, &task, episodes, seed)?)?;
    }
    Ok(log)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let log = evaluate_run(&args.run, args.episodes, args.seed)?;
    if log.is_empty() {
        return Err(Error::Invalid(format!("{} has no checkpoints", args.run.display())));
    }
    for c in log.checkpoints() {
        println!("episode {:>7}  mean return {:.4}", c.episode, c.mean());
    }
    println!("final metric:    {:.4}", final_metric(&log)?);
    println!("absolute metric: {:.4}", absolute_metric(&log)?);
    if let Some(out) = &args.out {
        write_evals(out, &log)?;
    }
    Ok(())
}

/// Evaluation logs of one side of a comparison: the directory itself if it
/// is a run, otherwise each run directory inside it (sorted by name).
pub fn collect_runs(dir: &Path) -> Result<Vec<EvalLog>> {
    let read = |run: &Path| -> Result<EvalLog> {
        let m = RunManifest::read(run)?;
        let evals = m
            .evals
            .ok_or_else(|| Error::Invalid(format!("{} has no evaluation log", run.display())))?;
        read_evals(&run.join(evals))
    };
    if dir.join(MANIFEST_FILE).exists() {
        return Ok(vec![read(dir)?]);
    }
    let mut runs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).exists())
        .collect();
    runs.sort();
    if runs.is_empty() {
        return Err(Error::Invalid(format!("no runs found under {}", dir.display())));
    }
    runs.iter().map(|r| read(r)).collect()
}

/// Samples for the `final` and `absolute` rows. With at least two runs per
/// side, one metric value per run; with a single run, the episode returns
/// behind each metric.
pub fn comparison_samples(logs: &[EvalLog]) -> Result<(Vec<f64>, Vec<f64>)> {
    if logs.len() >= 2 {
        let fin = logs.iter().map(final_metric).collect::<Result<_>>()?;
        let abs = logs.iter().map(absolute_metric).collect::<Result<_>>()?;
        return Ok((fin, abs));
    }
    let log = logs.first().ok_or(Error::EmptyLog)?;
    let best = log.best().ok_or(Error::EmptyLog)?;
    Ok((log.final_returns(), best.returns.clone()))
}

/// `abs.` and `final` reports of `candidate − baseline`.
pub fn compare_runs(candidate: &Path, baseline: &Path, kind: TTestKind, seed: u64) -> Result<Vec<StatReport>> {
    let (cf, ca) = comparison_samples(&collect_runs(candidate)?)?;
    let (bf, ba) = comparison_samples(&collect_runs(baseline)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        StatReport::compute("abs.", &ca, &ba, kind, N_BOOT, &mut rng)?,
        StatReport::compute("final", &cf, &bf, kind, N_BOOT, &mut rng)?,
    ])
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let kind = if args.welch {
        TTestKind::Welch
    } else {
        TTestKind::Pooled
    };
    let reports = compare_runs(&args.candidate, &args.baseline, kind, args.seed)?;
    print!("{}", format_table(&reports));
    if let Some(out) = &args.out {
        crate::evalstat::export(out, &[], &EvalLog::new(), &reports)?;
    }
    Ok(())
}

/// Steps per second of both physics paths on a cooperative-navigation world.
#[derive(Clone, Copy, Debug)]
pub struct BenchRow {
    pub n: usize,
    pub vectorized_sps: f64,
    pub reference_sps: f64,
}

pub fn bench_physics(n: usize, steps: usize, seed: u64) -> Result<BenchRow> {
    let task = TaskSpec::new(TaskKind::CoopNav, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = spawn(&task, &mut rng);
    let actions = JointAction::new(crate::numerics::Matrix::from_elem((n, 5), 0.5))?;
    let time = |path: StepPath| -> Result<f64> {
        let mut w = world.clone();
        let start = Instant::now();
        for _ in 0..steps {
            step_with(&mut w, &actions, path)?;
        }
        Ok(steps as f64 / start.elapsed().as_secs_f64())
    };
    let reference_sps = time(StepPath::Reference)?;
    let vectorized_sps = time(StepPath::Vectorized)?;
    Ok(BenchRow {
        n,
        vectorized_sps,
        reference_sps,
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    println!("{:>6}  {:>14}  {:>14}  {:>8}", "N", "vectorized/s", "reference/s", "speedup");
    for &n in &args.n {
        let r = bench_physics(n, args.steps, 0)?;
        println!(
            "{:>6}  {:>14.1}  {:>14.1}  {:>7.1}x",
            r.n,
            r.vectorized_sps,
            r.reference_sps,
            r.vectorized_sps / r.reference_sps
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_paper_values() {
        let c = parse_config(&[], None).unwrap();
        assert_eq!((c.gamma, c.batch_size, c.buffer_capacity, c.lr, c.hidden), (0.95, 1024, 1_000_000, 0.01, 128));
    }

    #[test]
    fn flag_beats_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "# comment\nepisodes = 500\n\nseed=3\n").unwrap();
        let c = parse_config(&flags(&[("episodes", "100")]), Some(&p)).unwrap();
        assert_eq!((c.episodes, c.seed), (100, 3));
    }

    #[test]
    fn gamma_out_of_range() {
        let err = parse_config(&flags(&[("gamma", "1.5")]), None).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn unknown_file_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "epsiodes=5\n").unwrap();
        assert!(parse_config(&[], Some(&p)).unwrap_err().is_config());
    }
}
