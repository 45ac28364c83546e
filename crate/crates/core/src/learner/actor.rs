use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::numerics::{Activation, Matrix, Mlp, MlpCache, ParamSet};

/// Deterministic policy: an MLP with ReLU hidden layers and a sigmoid head,
/// so every action channel lies in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Actor {
    pub net: Mlp,
    pub params: ParamSet,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(act_dim);
        let net = Mlp::new(&mut params, "actor", &sizes, Activation::Relu, Activation::Sigmoid, rng);
        Actor { net, params }
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim(&self.params)
    }

    pub fn act_dim(&self) -> usize {
        self.net.output_dim(&self.params)
    }

    /// Noise-free actions for a batch of observations (one per row).
    pub fn act(&self, obs: &Matrix) -> Result<Matrix> {
        self.net.predict(&self.params, obs)
    }

    pub fn forward(&self, obs: Matrix) -> Result<MlpCache> {
        self.net.forward(&self.params, obs)
    }
}

/// Policy action plus `noise·N(0, 1)` per channel, clamped to `[0, 1]`.
pub fn select_action<R: Rng + ?Sized>(actor: &Actor, obs: &[f64], noise: f64, rng: &mut R) -> Result<Vec<f64>> {
    assert!(noise >= 0.0, "noise scale must be non-negative");
    let x = Matrix::from_shape_vec((1, obs.len()), obs.to_vec())
        .map_err(|_| crate::Error::dim("actor observation", &[obs.len()], &[actor.obs_dim()]))?;
    let mut a = actor.act(&x)?.row(0).to_vec();
    if noise > 0.0 {
        for v in &mut a {
            let eps: f64 = rng.sample(StandardNormal);
            *v = (*v + noise * eps).clamp(0.0, 1.0);
        }
    }
    Ok(a)
}
