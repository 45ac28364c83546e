use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::ACTION_DIM;
use crate::error::{Error, Result};
use crate::learner::Actor;
use crate::numerics::Matrix;
use crate::scenarios::{Env, TaskSpec};

/// Maps the joint observation (one row per agent) to joint actions.
pub trait Policy: Sync {
    /// Number of agents the policy controls, if fixed.
    fn n_agents(&self) -> Option<usize>;

    fn actions(&self, obs: &Matrix, rng: &mut dyn RngCore) -> Result<Matrix>;
}

/// Noise-free decentralized execution: agent `i` acts on its own row.
#[derive(Clone, Debug)]
pub struct ActorPolicy {
    pub actors: Vec<Actor>,
}

impl Policy for ActorPolicy {
    fn n_agents(&self) -> Option<usize> {
        Some(self.actors.len())
    }

    fn actions(&self, obs: &Matrix, _rng: &mut dyn RngCore) -> Result<Matrix> {
        let mut out = Matrix::zeros((obs.nrows(), ACTION_DIM));
        for (i, actor) in self.actors.iter().enumerate() {
            let row = obs.row(i).insert_axis(ndarray::Axis(0)).to_owned();
            out.row_mut(i).assign(&actor.act(&row)?.row(0));
        }
        Ok(out)
    }
}

/// Uniform actions in `[0, 1]^5`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn n_agents(&self) -> Option<usize> {
        None
    }

    fn actions(&self, obs: &Matrix, rng: &mut dyn RngCore) -> Result<Matrix> {
        Ok(Matrix::from_shape_simple_fn((obs.nrows(), ACTION_DIM), || rng.random_range(0.0..1.0)))
    }
}

/// Generator for episode `e` of an evaluation seeded by `seed`: a distinct
/// ChaCha stream per episode, so results do not depend on thread count.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Plays one episode and returns the summed shared reward.
pub fn rollout<P: Policy + ?Sized>(policy: &P, task: &TaskSpec, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut env = Env::reset(task, rng);
    let mut total = 0.0;
    for _ in 0..task.episode_len {
        let obs = env.observations();
        let act = policy.actions(&obs, rng)?;
        let r = env.step(&act, rng)?;
        total += r[0];
    }
    Ok(total)
}

/// Returns of `episodes` rollouts, in episode order. Episodes run in
/// parallel; each uses its own generator stream.
pub fn evaluate<P: Policy + ?Sized>(policy: &P, task: &TaskSpec, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    if let Some(n) = policy.n_agents() {
        if n != task.n_agents {
            return Err(Error::dim("policy agents", &[n], &[task.n_agents]));
        }
    }
    (0..episodes as u64)
        .into_par_iter()
        .map(|e| rollout(policy, task, &mut episode_rng(seed, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::TaskKind;

    #[test]
    fn zero_episodes_empty() {
        let task = TaskSpec::new(TaskKind::CoopNav, 3).unwrap();
        assert!(evaluate(&RandomPolicy, &task, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_returns() {
        let task = TaskSpec::new(TaskKind::CoopNav, 3).unwrap();
        let a = evaluate(&RandomPolicy, &task, 8, 42).unwrap();
        let b = evaluate(&RandomPolicy, &task, 8, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.is_finite() && *r < 0.0));
    }

    #[test]
    fn wrong_agent_count_rejected() {
        let task = TaskSpec::new(TaskKind::CoopNav, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let policy = ActorPolicy {
            actors: vec![Actor::new(task.obs_dim(), 5, &[4], &mut rng); 2],
        };
        assert!(evaluate(&policy, &task, 1, 0).is_err());
    }
}
