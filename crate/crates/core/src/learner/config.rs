use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::critics::{CriticKind, GraphMode, Pooling};
use crate::error::{Error, Result};
use crate::scenarios::TaskKind;

/// Everything needed to reproduce a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: TaskKind,
    pub n_agents: usize,
    pub critic: CriticKind,
    pub graph: GraphMode,
    pub pooling: Pooling,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub lr: f64,
    pub tau: f64,
    /// Environment steps between update rounds.
    pub update_interval: usize,
    /// Initial exploration noise scale, annealed linearly to zero.
    pub noise: f64,
    pub hidden: usize,
    /// Width of the per-group embedding for heterogeneous teams.
    pub embed_dim: usize,
    /// Transitions required before the first update.
    pub warmup: usize,
    /// Gradient L2-norm ceiling per network; 0 disables clipping.
    pub grad_clip: f64,
    /// Evaluation episodes per saved checkpoint after training.
    pub eval_episodes: usize,
    pub checkpoints: usize,
    /// Write elapsed seconds into the metrics file. Off by default so that
    /// identical runs give identical files.
    pub record_wallclock: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: TaskKind::CoopNav,
            n_agents: 3,
            critic: CriticKind::Pic,
            graph: GraphMode::Full,
            pooling: Pooling::Max,
            gamma: 0.95,
            batch_size: 1024,
            buffer_capacity: 1_000_000,
            episodes: 5000,
            lr: 0.01,
            tau: 0.01,
            update_interval: 100,
            noise: 0.3,
            hidden: 128,
            embed_dim: 2,
            warmup: 1024,
            grad_clip: 0.5,
            eval_episodes: 1000,
            checkpoints: 10,
            record_wallclock: false,
            seed: 0,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in file order.
pub const CONFIG_KEYS: &[&str] = &[
    "task",
    "n_agents",
    "critic",
    "graph",
    "pooling",
    "gamma",
    "batch_size",
    "buffer_capacity",
    "episodes",
    "lr",
    "tau",
    "update_interval",
    "noise",
    "hidden",
    "embed_dim",
    "warmup",
    "grad_clip",
    "eval_episodes",
    "checkpoints",
    "record_wallclock",
    "seed",
];

fn parse<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::config(key, value, expected))
}

fn parse_enum<T: FromStr<Err = Error>>(key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|e| match e {
        Error::Config { expected, .. } => Error::config(key, value, expected),
        other => other,
    })
}

impl TrainConfig {
    /// Sets one field from its textual form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => self.task = parse_enum(key, value)?,
            "n_agents" => self.n_agents = parse(key, value, "an integer >= 2")?,
            "critic" => self.critic = parse_enum(key, value)?,
            "graph" => self.graph = parse_enum(key, value)?,
            "pooling" => self.pooling = parse_enum(key, value)?,
            "gamma" => self.gamma = parse(key, value, "a number in (0, 1]")?,
            "batch_size" => self.batch_size = parse(key, value, "a positive integer")?,
            "buffer_capacity" => self.buffer_capacity = parse(key, value, "a positive integer")?,
            "episodes" => self.episodes = parse(key, value, "a non-negative integer")?,
            "lr" => self.lr = parse(key, value, "a number > 0")?,
            "tau" => self.tau = parse(key, value, "a number in [0, 1]")?,
            "update_interval" => self.update_interval = parse(key, value, "a positive integer")?,
            "noise" => self.noise = parse(key, value, "a number >= 0")?,
            "hidden" => self.hidden = parse(key, value, "a positive integer")?,
            "embed_dim" => self.embed_dim = parse(key, value, "a positive integer")?,
            "warmup" => self.warmup = parse(key, value, "a non-negative integer")?,
            "grad_clip" => self.grad_clip = parse(key, value, "a number >= 0 (0 disables)")?,
            "eval_episodes" => self.eval_episodes = parse(key, value, "a non-negative integer")?,
            "checkpoints" => self.checkpoints = parse(key, value, "a non-negative integer")?,
            "record_wallclock" => self.record_wallclock = parse(key, value, "true or false")?,
            "seed" => self.seed = parse(key, value, "an unsigned integer")?,
            _ => return Err(Error::config(key, value, format!("a known key ({})", CONFIG_KEYS.join(", ")))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in the order of [`CONFIG_KEYS`]; feeding them
    /// back through [`TrainConfig::set`] reproduces the config exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        CONFIG_KEYS
            .iter()
            .map(|&k| {
                let v = match k {
                    "task" => self.task.to_string(),
                    "n_agents" => self.n_agents.to_string(),
                    "critic" => self.critic.to_string(),
                    "graph" => self.graph.to_string(),
                    "pooling" => self.pooling.to_string(),
                    "gamma" => self.gamma.to_string(),
                    "batch_size" => self.batch_size.to_string(),
                    "buffer_capacity" => self.buffer_capacity.to_string(),
                    "episodes" => self.episodes.to_string(),
                    "lr" => self.lr.to_string(),
                    "tau" => self.tau.to_string(),
                    "update_interval" => self.update_interval.to_string(),
                    "noise" => self.noise.to_string(),
                    "hidden" => self.hidden.to_string(),
                    "embed_dim" => self.embed_dim.to_string(),
                    "warmup" => self.warmup.to_string(),
                    "grad_clip" => self.grad_clip.to_string(),
                    "eval_episodes" => self.eval_episodes.to_string(),
                    "checkpoints" => self.checkpoints.to_string(),
                    "record_wallclock" => self.record_wallclock.to_string(),
                    "seed" => self.seed.to_string(),
                    _ => unreachable!("every key is listed"),
                };
                (k, v)
            })
            .collect()
    }

    /// Range checks that need more than one field or a numeric bound.
    pub fn validate(&self) -> Result<()> {
        let num = |key: &str, v: f64, ok: bool, expected: &str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, v, expected))
            }
        };
        num("gamma", self.gamma, self.gamma > 0.0 && self.gamma <= 1.0, "a number in (0, 1]")?;
        num("lr", self.lr, self.lr > 0.0, "a number > 0")?;
        num("tau", self.tau, (0.0..=1.0).contains(&self.tau), "a number in [0, 1]")?;
        num("noise", self.noise, self.noise >= 0.0, "a number >= 0")?;
        num("grad_clip", self.grad_clip, self.grad_clip >= 0.0, "a number >= 0 (0 disables)")?;
        let positive = [
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
            ("update_interval", self.update_interval),
            ("hidden", self.hidden),
            ("embed_dim", self.embed_dim),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, v, "a positive integer"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return Err(Error::config(
                "batch_size",
                self.batch_size,
                format!("at most buffer_capacity = {}", self.buffer_capacity),
            ));
        }
        if let GraphMode::Knn(k) = self.graph {
            if k >= self.n_agents {
                return Err(Error::config("graph", self.graph, format!("K < n_agents = {}", self.n_agents)));
            }
            if self.critic != CriticKind::Pic {
                return Err(Error::config("graph", self.graph, "`full` unless critic = pic"));
            }
        }
        crate::scenarios::TaskSpec::new(self.task, self.n_agents)?;
        Ok(())
    }
}
