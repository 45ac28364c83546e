use ndarray::{s, Array1};
use rand::seq::SliceRandom;
use rand::Rng;

use super::actor::Actor;
use super::buffer::Batch;
use crate::critics::{build_adjacency, CriticInput, CriticNet, GraphMode, Graphs};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, clip_grad_norm, AdamConfig, AdamState, BackwardMode, Matrix, ParamSet};

/// Online and target networks of one agent, with their optimizer states.
#[derive(Clone, Debug)]
pub struct Agent {
    pub actor: Actor,
    pub target_actor: Actor,
    pub critic: CriticNet,
    pub target_critic: CriticNet,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
}

impl Agent {
    /// Targets start as exact copies of the online networks.
    pub fn new(actor: Actor, critic: CriticNet) -> Self {
        let actor_opt = AdamState::new(&actor.params, AdamConfig::default());
        let critic_opt = AdamState::new(critic.params(), AdamConfig::default());
        Agent {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }
}

/// Settings shared by every update in a round.
#[derive(Clone, Copy, Debug)]
pub struct UpdateContext<'a> {
    pub gamma: f64,
    pub lr: f64,
    pub grad_clip: f64,
    pub graph: GraphMode,
    pub groups: Option<&'a [usize]>,
}

/// Critic graphs for a stacked observation matrix. Agent positions are the
/// first two observation entries.
pub fn batch_graphs(obs: &Matrix, n: usize, mode: GraphMode) -> Result<Graphs> {
    match mode {
        GraphMode::Full => Ok(Graphs::Full),
        GraphMode::Knn(_) => {
            let b = obs.nrows() / n;
            (0..b)
                .map(|k| build_adjacency(obs.slice(s![k * n..(k + 1) * n, 0..2]), mode))
                .collect::<Result<Vec<_>>>()
                .map(Graphs::PerSample)
        }
    }
}

/// Target-actor actions on the next observations, stacked like `next_obs`.
pub fn target_actions(agents: &[Agent], next_obs: &Matrix) -> Result<Matrix> {
    let n = agents.len();
    let mut out = Matrix::zeros((next_obs.nrows(), agents[0].actor.act_dim()));
    for (i, agent) in agents.iter().enumerate() {
        let o = Batch::agent_rows(next_obs, n, i);
        let a = agent.target_actor.act(&o)?;
        out.slice_mut(s![i..;n, ..]).assign(&a);
    }
    Ok(out)
}

fn optimize(params: &mut ParamSet, opt: &mut AdamState, ctx: &UpdateContext<'_>) -> Result<()> {
    if ctx.grad_clip > 0.0 {
        clip_grad_norm(params, ctx.grad_clip);
    }
    adam_step(params, opt, ctx.lr)
}

/// Bootstrapped targets `y = r_i + γ·Q⁻_i(x', a')` for agent `i`.
pub fn td_targets(agent: &Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<Array1<f64>> {
    let n = batch.n_agents;
    let next_act = batch
        .next_act
        .as_ref()
        .ok_or_else(|| Error::Invalid("batch is missing target next actions".into()))?;
    let next_graphs = batch_graphs(&batch.next_obs, n, ctx.graph)?;
    let q_next = agent.target_critic.q(&CriticInput {
        obs: &batch.next_obs,
        act: next_act,
        n_agents: n,
        groups: ctx.groups,
        graphs: &next_graphs,
    })?;
    Ok(Array1::from_shape_fn(batch.len(), |b| {
        let cont = if batch.done[b] { 0.0 } else { 1.0 };
        batch.rew[[b, i]] + ctx.gamma * cont * q_next[b]
    }))
}

/// Mean squared error and its gradient with respect to `q`.
fn mse(q: &Array1<f64>, y: &Array1<f64>) -> (f64, Array1<f64>) {
    let len = q.len() as f64;
    let err = q - y;
    let loss = err.iter().map(|e| e * e).sum::<f64>() / len;
    (loss, err * (2.0 / len))
}

/// Squared TD error of agent `i`'s critic on the batch, with its gradient
/// with respect to the critic output. Does not touch parameters.
pub fn critic_loss(agent: &Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<(f64, Array1<f64>)> {
    let y = td_targets(agent, i, batch, ctx)?;
    let graphs = batch_graphs(&batch.obs, batch.n_agents, ctx.graph)?;
    let q = agent.critic.q(&CriticInput {
        obs: &batch.obs,
        act: &batch.act,
        n_agents: batch.n_agents,
        groups: ctx.groups,
        graphs: &graphs,
    })?;
    Ok(mse(&q, &y))
}

/// One regression step of agent `i`'s critic towards the bootstrapped
/// target. Returns the loss before the step.
pub fn critic_update(agent: &mut Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<f64> {
    let n = batch.n_agents;
    let y = td_targets(agent, i, batch, ctx)?;
    let graphs = batch_graphs(&batch.obs, n, ctx.graph)?;
    let input = CriticInput {
        obs: &batch.obs,
        act: &batch.act,
        n_agents: n,
        groups: ctx.groups,
        graphs: &graphs,
    };
    let cache = agent.critic.forward(&input)?;
    let (loss, dq) = mse(cache.q(), &y);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "critic loss of agent {i}: {loss} (reward range {:?})",
            reward_range(&batch.rew)
        )));
    }
    agent.critic.params_mut().zero_grad();
    agent.critic.backward(&cache, &dq, BackwardMode::Full)?;
    optimize(agent.critic.params_mut(), &mut agent.critic_opt, ctx)?;
    Ok(loss)
}

fn reward_range(r: &Matrix) -> (f64, f64) {
    r.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Joint actions with agent `i`'s rows replaced by its current policy
/// output, together with the actor cache for backpropagation.
fn actions_with_policy(agent: &Agent, i: usize, batch: &Batch) -> Result<(Matrix, crate::numerics::MlpCache)> {
    let n = batch.n_agents;
    let cache = agent.actor.forward(Batch::agent_rows(&batch.obs, n, i))?;
    let mut act = batch.act.clone();
    act.slice_mut(s![i..;n, ..]).assign(cache.output());
    Ok((act, cache))
}

/// Mean critic value when agent `i` follows its current policy and everyone
/// else keeps the batch actions.
pub fn actor_objective(agent: &Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<f64> {
    let (act, _) = actions_with_policy(agent, i, batch)?;
    let graphs = batch_graphs(&batch.obs, batch.n_agents, ctx.graph)?;
    let q = agent.critic.q(&CriticInput {
        obs: &batch.obs,
        act: &act,
        n_agents: batch.n_agents,
        groups: ctx.groups,
        graphs: &graphs,
    })?;
    Ok(q.mean().unwrap_or(0.0))
}

/// Accumulates `-∇J` into the actor's gradient slots (after zeroing them)
/// and returns `J`. Critic parameter gradients are left untouched.
pub fn actor_gradient(agent: &mut Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<f64> {
    let n = batch.n_agents;
    let (act, actor_cache) = actions_with_policy(agent, i, batch)?;
    let graphs = batch_graphs(&batch.obs, n, ctx.graph)?;
    let input = CriticInput {
        obs: &batch.obs,
        act: &act,
        n_agents: n,
        groups: ctx.groups,
        graphs: &graphs,
    };
    let critic_cache = agent.critic.forward(&input)?;
    let q = critic_cache.q();
    let j = q.mean().unwrap_or(0.0);
    if !j.is_finite() {
        return Err(Error::NonFinite(format!("actor objective of agent {i}")));
    }
    let dq = Array1::from_elem(q.len(), -1.0 / q.len() as f64);
    let da = agent.critic.backward(&critic_cache, &dq, BackwardMode::InputOnly)?;
    let da_i = Batch::agent_rows(&da, n, i);
    agent.actor.params.zero_grad();
    agent
        .actor
        .net
        .backward(&mut agent.actor.params, &actor_cache, da_i, BackwardMode::Full)?;
    Ok(j)
}

/// One policy-gradient ascent step for agent `i`. Returns `J` before the step.
pub fn actor_update(agent: &mut Agent, i: usize, batch: &Batch, ctx: &UpdateContext<'_>) -> Result<f64> {
    let j = actor_gradient(agent, i, batch, ctx)?;
    optimize(&mut agent.actor.params, &mut agent.actor_opt, ctx)?;
    Ok(j)
}

/// `target ← τ·online + (1 − τ)·target`, parameter by parameter.
pub fn soft_update(target: &mut ParamSet, online: &ParamSet, tau: f64) -> Result<()> {
    if !target.same_layout(online) {
        return Err(Error::Invalid("soft update between different architectures".into()));
    }
    for (t, o) in target.iter_mut().zip(online.iter()) {
        t.value.zip_mut_with(&o.value, |t, &o| *t = tau * o + (1.0 - tau) * *t);
    }
    Ok(())
}

/// Relabels agents within every transition by an independent uniform
/// permutation. Observations, actions, rewards, next observations, and next
/// actions all move together.
pub fn shuffle_augment<R: Rng + ?Sized>(batch: &Batch, rng: &mut R) -> Batch {
    let n = batch.n_agents;
    let mut out = batch.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for b in 0..batch.len() {
        perm.shuffle(rng);
        permute_transition(batch, &mut out, b, &perm);
    }
    out
}

/// Writes transition `b` of `src` into `dst` with new slot `k` taking old
/// agent `perm[k]`.
pub fn permute_transition(src: &Batch, dst: &mut Batch, b: usize, perm: &[usize]) {
    let n = src.n_agents;
    for (k, &p) in perm.iter().enumerate() {
        let (to, from) = (b * n + k, b * n + p);
        dst.obs.row_mut(to).assign(&src.obs.row(from));
        dst.act.row_mut(to).assign(&src.act.row(from));
        dst.next_obs.row_mut(to).assign(&src.next_obs.row(from));
        if let (Some(d), Some(s)) = (dst.next_act.as_mut(), src.next_act.as_ref()) {
            d.row_mut(to).assign(&s.row(from));
        }
        dst.rew[[b, k]] = src.rew[[b, p]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critics::MlpCritic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_batch(rng: &mut ChaCha8Rng, b: usize, n: usize, ko: usize) -> Batch {
        let m = |r: usize, c: usize, rng: &mut ChaCha8Rng| Matrix::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0));
        Batch {
            n_agents: n,
            obs: m(b * n, ko, rng),
            act: m(b * n, 5, rng).mapv(f64::abs),
            rew: m(b, n, rng),
            next_obs: m(b * n, ko, rng),
            done: vec![false; b],
            next_act: Some(m(b * n, 5, rng).mapv(f64::abs)),
        }
    }

    #[test]
    fn soft_update_arithmetic() {
        let mut t = ParamSet::new();
        t.add("w", Matrix::zeros((1, 1)));
        let mut o = ParamSet::new();
        o.add("w", Matrix::ones((1, 1)));
        let mut half = t.clone();
        soft_update(&mut half, &o, 0.5).unwrap();
        assert_eq!(half.iter().next().unwrap().value[[0, 0]], 0.5);
        let mut copy = t.clone();
        soft_update(&mut copy, &o, 1.0).unwrap();
        assert_eq!(copy.max_abs_diff(&o), 0.0);
        let mut same = t.clone();
        soft_update(&mut same, &o, 0.0).unwrap();
        assert_eq!(same.max_abs_diff(&t), 0.0);
    }

    #[test]
    fn identity_shuffle_is_noop_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = toy_batch(&mut rng, 6, 3, 4);
        let mut out = batch.clone();
        for b in 0..6 {
            permute_transition(&batch, &mut out, b, &[0, 1, 2]);
        }
        assert_eq!(out, batch);
        let shuffled = shuffle_augment(&batch, &mut rng);
        for b in 0..6 {
            // recover the permutation from the observation rows and check it
            // moved every other field the same way
            for k in 0..3 {
                let row = shuffled.obs.row(b * 3 + k);
                let p = (0..3).find(|&j| batch.obs.row(b * 3 + j) == row).unwrap();
                assert_eq!(shuffled.act.row(b * 3 + k), batch.act.row(b * 3 + p));
                assert_eq!(shuffled.next_obs.row(b * 3 + k), batch.next_obs.row(b * 3 + p));
                assert_eq!(shuffled.rew[[b, k]], batch.rew[[b, p]]);
            }
        }
    }

    #[test]
    fn zero_critic_leaves_actor_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let actor = Actor::new(4, 5, &[8], &mut rng);
        let mut critic = CriticNet::Mlp(MlpCritic::new(2, 4, 5, &[8], &mut rng));
        for p in critic.params_mut().iter_mut() {
            p.value.fill(0.0);
        }
        let mut agent = Agent::new(actor, critic);
        let before = agent.actor.params.clone();
        let batch = toy_batch(&mut rng, 8, 2, 4);
        let ctx = UpdateContext {
            gamma: 0.95,
            lr: 0.01,
            grad_clip: 0.0,
            graph: GraphMode::Full,
            groups: None,
        };
        actor_update(&mut agent, 0, &batch, &ctx).unwrap();
        assert_eq!(agent.actor.params.max_abs_diff(&before), 0.0);
    }

    #[test]
    fn fixed_point_has_zero_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let actor = Actor::new(4, 5, &[8], &mut rng);
        let mut critic = CriticNet::Mlp(MlpCritic::new(2, 4, 5, &[8], &mut rng));
        for p in critic.params_mut().iter_mut() {
            p.value.fill(0.0);
        }
        let agent = Agent::new(actor, critic);
        let mut batch = toy_batch(&mut rng, 8, 2, 4);
        batch.rew.fill(0.0);
        let ctx = UpdateContext {
            gamma: 0.0,
            lr: 0.01,
            grad_clip: 0.0,
            graph: GraphMode::Full,
            groups: None,
        };
        let (loss, dq) = critic_loss(&agent, 1, &batch, &ctx).unwrap();
        assert_eq!(loss, 0.0);
        assert!(dq.iter().all(|&g| g == 0.0));
    }
}
