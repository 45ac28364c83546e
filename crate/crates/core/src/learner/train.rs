use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::actor::{select_action, Actor};
use super::buffer::{ReplayBuffer, Transition};
use super::config::TrainConfig;
use super::update::{actor_update, critic_update, shuffle_augment, soft_update, target_actions, Agent, UpdateContext};
use crate::cli::checkpoint::save_checkpoint;
use crate::cli::manifest::{git_stamp, RunManifest};
use crate::critics::{CriticKind, CriticNet, MlpCritic, PicCritic, PicSpec};
use crate::engine::ACTION_DIM;
use crate::error::{Error, Result};
use crate::evalstat::{absolute_metric, evaluate, final_metric, write_evals, ActorPolicy, EvalLog, MetricRow, MetricsWriter};
use crate::numerics::Matrix;
use crate::scenarios::{Env, TaskSpec};

/// Episodes (1-based, after which a policy is saved): `count` points evenly
/// spaced over the final tenth of training, ending at the last episode.
pub fn checkpoint_schedule(episodes: usize, count: usize) -> Vec<usize> {
    let count = count.min(episodes);
    if count == 0 {
        return Vec::new();
    }
    let window = (episodes / 10).max(count);
    let start = episodes - window;
    let mut out: Vec<usize> = (1..=count)
        .map(|k| start + (k * window + count / 2) / count)
        .collect();
    out.dedup();
    out
}

/// Fresh agents for a task. Heterogeneous teams get group embeddings in the
/// graph critic.
pub fn build_agents(config: &TrainConfig, task: &TaskSpec, rng: &mut ChaCha8Rng) -> Vec<Agent> {
    let hidden = [config.hidden, config.hidden];
    let k_o = task.obs_dim();
    (0..task.n_agents)
        .map(|_| {
            let actor = Actor::new(k_o, ACTION_DIM, &hidden, rng);
            let critic = match config.critic {
                CriticKind::Pic => CriticNet::Pic(PicCritic::new(
                    PicSpec {
                        obs_dim: k_o,
                        act_dim: ACTION_DIM,
                        hidden: hidden.to_vec(),
                        pooling: config.pooling,
                        groups: task
                            .is_heterogeneous()
                            .then_some((task.n_groups(), config.embed_dim)),
                    },
                    rng,
                )),
                CriticKind::Mlp | CriticKind::MlpAug => {
                    CriticNet::Mlp(MlpCritic::new(task.n_agents, k_o, ACTION_DIM, &hidden, rng))
                }
            };
            Agent::new(actor, critic)
        })
        .collect()
}

/// Step-by-step training state. [`train`] drives it and writes artifacts;
/// examples and tests can drive it directly.
pub struct Trainer {
    pub config: TrainConfig,
    pub task: TaskSpec,
    pub agents: Vec<Agent>,
    pub buffer: ReplayBuffer,
    groups: Option<Vec<usize>>,
    rng: ChaCha8Rng,
    steps: usize,
    episode: usize,
}

/// Statistics of one training episode.
#[derive(Clone, Copy, Debug)]
pub struct EpisodeStats {
    pub reward: f64,
    pub critic_loss: f64,
    pub actor_obj: f64,
    pub updates: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let task = TaskSpec::new(config.task, config.n_agents)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let agents = build_agents(&config, &task, &mut rng);
        let buffer = ReplayBuffer::new(config.buffer_capacity, task.n_agents, task.obs_dim(), ACTION_DIM);
        let groups = (config.critic == CriticKind::Pic && task.is_heterogeneous()).then(|| task.group_assignment());
        Ok(Trainer {
            config,
            task,
            agents,
            buffer,
            groups,
            rng,
            steps: 0,
            episode: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    /// Fraction of the schedule remaining at the current episode.
    fn remaining(&self) -> f64 {
        if self.config.episodes == 0 {
            return 1.0;
        }
        1.0 - (self.episode as f64 / self.config.episodes as f64).min(1.0)
    }

    pub fn policy(&self) -> ActorPolicy {
        ActorPolicy {
            actors: self.agents.iter().map(|a| a.actor.clone()).collect(),
        }
    }

    /// One round: sample a batch, update every agent's critic then actor,
    /// then move all targets. Returns mean critic loss and actor objective.
    pub fn update_round(&mut self) -> Result<(f64, f64)> {
        let n = self.task.n_agents;
        let mut batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        batch.next_act = Some(target_actions(&self.agents, &batch.next_obs)?);
        let shuffled;
        let critic_batch = if self.config.critic == CriticKind::MlpAug {
            shuffled = shuffle_augment(&batch, &mut self.rng);
            &shuffled
        } else {
            &batch
        };
        let ctx = UpdateContext {
            gamma: self.config.gamma,
            lr: self.config.lr * self.remaining(),
            grad_clip: self.config.grad_clip,
            graph: self.config.graph,
            groups: self.groups.as_deref(),
        };
        let (mut loss, mut obj) = (0.0, 0.0);
        for (i, agent) in self.agents.iter_mut().enumerate() {
            loss += critic_update(agent, i, critic_batch, &ctx)?;
            obj += actor_update(agent, i, &batch, &ctx)?;
        }
        for agent in &mut self.agents {
            soft_update(&mut agent.target_actor.params, &agent.actor.params, self.config.tau)?;
            soft_update(agent.target_critic.params_mut(), agent.critic.params(), self.config.tau)?;
        }
        Ok((loss / n as f64, obj / n as f64))
    }

    /// Plays one exploratory episode, storing transitions and running update
    /// rounds on schedule.
    pub fn run_episode(&mut self) -> Result<EpisodeStats> {
        let noise = self.config.noise * self.remaining();
        let n = self.task.n_agents;
        let mut env = Env::reset(&self.task, &mut self.rng);
        let mut stats = EpisodeStats {
            reward: 0.0,
            critic_loss: 0.0,
            actor_obj: 0.0,
            updates: 0,
        };
        let mut obs = env.observations();
        for _ in 0..self.task.episode_len {
            let mut act = Matrix::zeros((n, ACTION_DIM));
            for (i, agent) in self.agents.iter().enumerate() {
                let a = select_action(&agent.actor, &obs.row(i).to_vec(), noise, &mut self.rng)?;
                act.row_mut(i).assign(&ndarray::ArrayView1::from(&a));
            }
            let rew = env.step(&act, &mut self.rng)?;
            let next_obs = env.observations();
            stats.reward += rew[0];
            // Episodes end on a time limit, which is not a terminal state.
            self.buffer.push(&Transition {
                obs,
                act,
                rew,
                next_obs: next_obs.clone(),
                done: false,
            })?;
            obs = next_obs;
            self.steps += 1;
            let ready = self.buffer.len() >= self.config.warmup.max(self.config.batch_size);
            if self.steps.is_multiple_of(self.config.update_interval) && ready {
                let (l, j) = self.update_round()?;
                stats.critic_loss += l;
                stats.actor_obj += j;
                stats.updates += 1;
            }
        }
        if stats.updates == 0 {
            stats.critic_loss = f64::NAN;
            stats.actor_obj = f64::NAN;
        } else {
            stats.critic_loss /= stats.updates as f64;
            stats.actor_obj /= stats.updates as f64;
        }
        self.episode += 1;
        Ok(stats)
    }

    pub fn save_policies(&self, path: &Path) -> Result<()> {
        let names: Vec<String> = (0..self.agents.len()).map(|i| format!("agent{i}")).collect();
        let sets: Vec<(&str, &crate::numerics::ParamSet)> = names
            .iter()
            .zip(&self.agents)
            .map(|(n, a)| (n.as_str(), &a.actor.params))
            .collect();
        save_checkpoint(path, &sets)
    }
}

/// Seed offset separating evaluation rollouts from the training stream.
pub const EVAL_SEED_OFFSET: u64 = 0x5EED_0E7A;

/// Runs a full training job into `out_dir`: metrics CSV, checkpoints of the
/// last policies, their evaluation, and the manifest.
pub fn train(config: &TrainConfig, out_dir: &Path) -> Result<RunManifest> {
    let mut trainer = Trainer::new(config.clone())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let metrics_path = PathBuf::from("metrics.csv");
    let mut metrics = MetricsWriter::create(&out_dir.join(&metrics_path))?;
    let schedule = checkpoint_schedule(config.episodes, config.checkpoints);
    let mut checkpoints = Vec::new();
    let mut snapshots = Vec::new();
    let start = Instant::now();

    for ep in 1..=config.episodes {
        let stats = match trainer.run_episode() {
            Ok(s) => s,
            Err(e) => {
                let path = out_dir.join(format!("abort_ep{ep:06}.ckpt"));
                if let Err(save) = trainer.save_policies(&path) {
                    warn!("could not save abort checkpoint: {save}");
                }
                metrics.flush()?;
                return Err(e);
            }
        };
        let wallclock_s = if config.record_wallclock {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        metrics.write(&MetricRow {
            episode: ep,
            steps: trainer.steps(),
            mean_episode_reward: stats.reward,
            critic_loss: stats.critic_loss,
            actor_obj: stats.actor_obj,
            wallclock_s,
        })?;
        if schedule.contains(&ep) {
            let file = PathBuf::from(format!("ckpt_ep{ep:06}.ckpt"));
            trainer.save_policies(&out_dir.join(&file))?;
            checkpoints.push((ep, file));
            snapshots.push((ep, trainer.policy()));
        }
        if ep % 500 == 0 || ep == config.episodes {
            info!(
                "episode {ep}/{} reward {:.2} critic loss {:.4}",
                config.episodes, stats.reward, stats.critic_loss
            );
        }
    }
    metrics.flush()?;
    let train_wallclock_s = start.elapsed().as_secs_f64();

    let eval_start = Instant::now();
    let mut evals = None;
    let (mut fin, mut abs) = (None, None);
    if config.eval_episodes > 0 && !snapshots.is_empty() {
        let mut log = EvalLog::new();
        for (ep, policy) in &snapshots {
            let returns = evaluate(
                policy,
                &trainer.task,
                config.eval_episodes,
                config.seed.wrapping_add(EVAL_SEED_OFFSET),
            )?;
            log.push(*ep, returns)?;
        }
        let file = PathBuf::from("evals.csv");
        write_evals(&out_dir.join(&file), &log)?;
        fin = Some(final_metric(&log)?);
        abs = Some(absolute_metric(&log)?);
        evals = Some(file);
    }

    let manifest = RunManifest {
        config: config.clone(),
        seed: config.seed,
        checkpoints,
        metrics: metrics_path,
        evals,
        final_metric: fin,
        absolute_metric: abs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        git: git_stamp(),
        train_wallclock_s,
        eval_wallclock_s: eval_start.elapsed().as_secs_f64(),
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_spacing() {
        assert_eq!(
            checkpoint_schedule(5000, 10),
            vec![4550, 4600, 4650, 4700, 4750, 4800, 4850, 4900, 4950, 5000]
        );
        assert_eq!(checkpoint_schedule(0, 10), Vec::<usize>::new());
        assert_eq!(checkpoint_schedule(1, 10), vec![1]);
        assert_eq!(checkpoint_schedule(20, 10), (11..=20).collect::<Vec<_>>());
    }
}
