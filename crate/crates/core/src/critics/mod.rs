//! Centralized critics: the order-dependent MLP baseline and the
//! permutation invariant graph critic.

mod adjacency;
mod gcn;
mod mlp;
mod pic;

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

pub use adjacency::{build_adjacency, Adjacency, GraphMode};
pub use gcn::{gcn_layer, pool, GcnCache, GcnLayer, GcnOutput, Graphs, Pooling};
pub use mlp::{mlp_critic_param_count, MlpCritic, MlpCriticCache};
pub use pic::{PicCache, PicCritic, PicSpec};

use crate::error::{Error, Result};
use crate::numerics::{BackwardMode, Matrix, ParamSet};

/// Which critic a run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticKind {
    Mlp,
    Pic,
    /// MLP critic trained on agent-shuffled batches.
    MlpAug,
}

impl fmt::Display for CriticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriticKind::Mlp => "mlp",
            CriticKind::Pic => "pic",
            CriticKind::MlpAug => "mlp_aug",
        })
    }
}

impl FromStr for CriticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(CriticKind::Mlp),
            "pic" => Ok(CriticKind::Pic),
            "mlp_aug" => Ok(CriticKind::MlpAug),
            _ => Err(Error::config("critic", s, "one of mlp, pic, mlp_aug")),
        }
    }
}

/// A batch of joint inputs. Row `b·N + i` of `obs`/`act` belongs to agent
/// `i` of sample `b`.
#[derive(Clone, Copy, Debug)]
pub struct CriticInput<'a> {
    pub obs: &'a Matrix,
    pub act: &'a Matrix,
    pub n_agents: usize,
    pub groups: Option<&'a [usize]>,
    pub graphs: &'a Graphs,
}

#[derive(Clone, Debug)]
pub enum CriticNet {
    Mlp(MlpCritic),
    Pic(PicCritic),
}

#[derive(Clone, Debug)]
pub enum CriticCache {
    Mlp(MlpCriticCache),
    Pic(PicCache),
}

impl CriticCache {
    pub fn q(&self) -> &Array1<f64> {
        match self {
            CriticCache::Mlp(c) => c.q(),
            CriticCache::Pic(c) => c.q(),
        }
    }

    /// Distance of the cached point from the nearest non-differentiable
    /// switch (ReLU hinge or max-pool tie).
    pub fn kink_margin(&self) -> f64 {
        match self {
            CriticCache::Mlp(c) => c.kink_margin(),
            CriticCache::Pic(c) => c.kink_margin(),
        }
    }
}

impl CriticNet {
    pub fn params(&self) -> &ParamSet {
        match self {
            CriticNet::Mlp(c) => c.params(),
            CriticNet::Pic(c) => c.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            CriticNet::Mlp(c) => c.params_mut(),
            CriticNet::Pic(c) => c.params_mut(),
        }
    }

    pub fn forward(&self, input: &CriticInput<'_>) -> Result<CriticCache> {
        Ok(match self {
            CriticNet::Mlp(c) => CriticCache::Mlp(c.forward(input)?),
            CriticNet::Pic(c) => CriticCache::Pic(c.forward(input)?),
        })
    }

    /// Q values only.
    pub fn q(&self, input: &CriticInput<'_>) -> Result<Array1<f64>> {
        Ok(self.forward(input)?.q().clone())
    }

    pub fn backward(&mut self, cache: &CriticCache, dq: &Array1<f64>, mode: BackwardMode) -> Result<Matrix> {
        match (self, cache) {
            (CriticNet::Mlp(c), CriticCache::Mlp(k)) => c.backward(k, dq, mode),
            (CriticNet::Pic(c), CriticCache::Pic(k)) => c.backward(k, dq, mode),
            _ => Err(Error::Invalid("critic cache belongs to a different critic kind".into())),
        }
    }
}
