use ndarray::{concatenate, s, Array1, Axis, Order};
use rand::Rng;

use super::CriticInput;
use crate::error::{Error, Result};
use crate::numerics::{Activation, BackwardMode, Matrix, Mlp, MlpCache, ParamSet};

/// Conventional centralized critic: the joint observation and joint action
/// are concatenated in agent order and fed to an MLP.
#[derive(Clone, Debug)]
pub struct MlpCritic {
    params: ParamSet,
    net: Mlp,
    n_agents: usize,
    obs_dim: usize,
    act_dim: usize,
}

#[derive(Clone, Debug)]
pub struct MlpCriticCache {
    inner: MlpCache,
    q: Array1<f64>,
}

impl MlpCriticCache {
    pub fn q(&self) -> &Array1<f64> {
        &self.q
    }

    pub fn kink_margin(&self) -> f64 {
        let layers = self.inner.layers();
        layers[..layers.len() - 1]
            .iter()
            .flat_map(|c| c.pre.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v.abs()))
    }
}

/// Trainable scalars of an MLP critic over `n` agents.
pub fn mlp_critic_param_count(n: usize, obs_dim: usize, act_dim: usize, hidden: &[usize]) -> usize {
    let mut k_in = n * (obs_dim + act_dim);
    let mut total = 0;
    for &k in hidden.iter().chain(std::iter::once(&1)) {
        total += k_in * k + k;
        k_in = k;
    }
    total
}

impl MlpCritic {
    pub fn new<R: Rng + ?Sized>(n_agents: usize, obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let mut sizes = vec![n_agents * (obs_dim + act_dim)];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let net = Mlp::new(&mut params, "mlp_critic", &sizes, Activation::Relu, Activation::Identity, rng);
        MlpCritic {
            params,
            net,
            n_agents,
            obs_dim,
            act_dim,
        }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// `[x, a]` per sample: `B × N·(K_o + K_a)`.
    fn joint_input(&self, input: &CriticInput<'_>) -> Result<Matrix> {
        let n = self.n_agents;
        let rows = input.obs.nrows();
        if input.n_agents != n || !rows.is_multiple_of(n) {
            return Err(Error::dim("mlp critic agents", &[input.n_agents], &[n]));
        }
        if input.obs.ncols() != self.obs_dim || input.act.shape() != [rows, self.act_dim] {
            return Err(Error::dim(
                "mlp critic input",
                &[input.obs.ncols() + input.act.ncols()],
                &[self.obs_dim + self.act_dim],
            ));
        }
        let b = rows / n;
        let x = input.obs.to_shape(((b, n * self.obs_dim), Order::RowMajor)).expect("same size");
        let a = input.act.to_shape(((b, n * self.act_dim), Order::RowMajor)).expect("same size");
        Ok(concatenate(Axis(1), &[x.view(), a.view()]).expect("same row count"))
    }

    pub fn forward(&self, input: &CriticInput<'_>) -> Result<MlpCriticCache> {
        let x = self.joint_input(input)?;
        let inner = self.net.forward(&self.params, x)?;
        let q = inner.output().column(0).to_owned();
        Ok(MlpCriticCache { inner, q })
    }

    /// Returns the gradient for the joint action, reshaped to `B·N × K_a`.
    pub fn backward(&mut self, cache: &MlpCriticCache, dq: &Array1<f64>, mode: BackwardMode) -> Result<Matrix> {
        let dy = dq.clone().insert_axis(Axis(1));
        let dx = self.net.backward(&mut self.params, &cache.inner, dy, mode)?;
        let b = dx.nrows();
        let da = dx.slice(s![.., self.n_agents * self.obs_dim..]);
        Ok(da
            .to_shape(((b * self.n_agents, self.act_dim), Order::RowMajor))
            .expect("same size")
            .into_owned())
    }
}
