use ndarray::{s, Array1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::gcn::{pool_backward, pool_batch, GcnCache, GcnLayer, Graphs, Pooling};
use super::CriticInput;
use crate::error::{Error, Result};
use crate::numerics::{Activation, BackwardMode, Dense, DenseCache, Matrix, ParamId, ParamSet};

/// Shape of a permutation invariant critic.
#[derive(Clone, Debug, PartialEq)]
pub struct PicSpec {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub pooling: Pooling,
    /// `(number of groups, embedding width)` for heterogeneous teams.
    pub groups: Option<(usize, usize)>,
}

impl PicSpec {
    /// Trainable scalars: per GCN layer `2·K_in·K_out + K_out`, plus the
    /// `K_L + 1` head and `G·K_g` embedding entries. Independent of N.
    pub fn param_count(&self) -> usize {
        let k_g = self.groups.map_or(0, |(_, d)| d);
        let mut k_in = self.obs_dim + self.act_dim + k_g;
        let mut total = 0;
        for &k_out in &self.hidden {
            total += 2 * k_in * k_out + k_out;
            k_in = k_out;
        }
        total + k_in + 1 + self.groups.map_or(0, |(g, d)| g * d)
    }
}

/// Stacked GCN layers, symmetric pooling, and a scalar affine head.
#[derive(Clone, Debug)]
pub struct PicCritic {
    params: ParamSet,
    layers: Vec<GcnLayer>,
    head: Dense,
    embed: Option<ParamId>,
    spec: PicSpec,
}

/// Activations kept from [`PicCritic::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct PicCache {
    q: Array1<f64>,
    layers: Vec<GcnCache>,
    argmax: Option<Vec<usize>>,
    head: DenseCache,
    groups: Option<Vec<usize>>,
    graphs: Graphs,
    n: usize,
    version: u64,
}

impl PicCache {
    pub fn q(&self) -> &Array1<f64> {
        &self.q
    }

    /// Smallest |pre-activation| over all ReLU units and the smallest gap
    /// between the best and runner-up entries of every max-pool column.
    /// Finite differences are only meaningful when both are well above the
    /// probe step.
    pub fn kink_margin(&self) -> f64 {
        let relu = self
            .layers
            .iter()
            .flat_map(|c| c.pre.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
        let Some(arg) = &self.argmax else {
            return relu;
        };
        let last = &self.layers.last().expect("at least one layer").out;
        let k = last.ncols();
        let batch = last.nrows() / self.n;
        let mut gap = f64::INFINITY;
        for b in 0..batch {
            for c in 0..k {
                let best = last[[arg[b * k + c], c]];
                // An all-zero ReLU column stays flat under small probes.
                if best <= 0.0 {
                    continue;
                }
                for i in 0..self.n {
                    let r = b * self.n + i;
                    if r != arg[b * k + c] {
                        gap = gap.min(best - last[[r, c]]);
                    }
                }
            }
        }
        relu.min(gap)
    }
}

impl PicCritic {
    pub fn new<R: Rng + ?Sized>(spec: PicSpec, rng: &mut R) -> Self {
        assert!(!spec.hidden.is_empty(), "pic needs at least one graph layer");
        let mut params = ParamSet::new();
        let embed = spec.groups.map(|(g, d)| {
            let init = Matrix::from_shape_simple_fn((g, d), || rng.sample(StandardNormal));
            params.add("pic.group_embed", init)
        });
        let mut k_in = spec.obs_dim + spec.act_dim + spec.groups.map_or(0, |(_, d)| d);
        let mut layers = Vec::with_capacity(spec.hidden.len());
        for (l, &k_out) in spec.hidden.iter().enumerate() {
            layers.push(GcnLayer::new(&mut params, &format!("pic.gcn{l}"), k_in, k_out, Activation::Relu, rng));
            k_in = k_out;
        }
        let head = Dense::new(&mut params, "pic.head", k_in, 1, Activation::Identity, rng);
        PicCritic {
            params,
            layers,
            head,
            embed,
            spec,
        }
    }

    pub fn spec(&self) -> &PicSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Builds the node input: rows `[obs_i, act_i, g_{G(i)}]`.
    fn node_input(&self, input: &CriticInput<'_>) -> Result<Matrix> {
        let (ko, ka) = (self.spec.obs_dim, self.spec.act_dim);
        let rows = input.obs.nrows();
        if input.obs.ncols() != ko || input.act.shape() != [rows, ka] {
            return Err(Error::dim("pic input", input.obs.shape(), &[rows, ko + ka]));
        }
        if input.n_agents == 0 || !rows.is_multiple_of(input.n_agents) {
            return Err(Error::dim("pic rows", &[rows], &[input.n_agents]));
        }
        let distinct_groups = input.groups.is_some_and(|g| g.iter().any(|&x| x != g[0]));
        match (self.embed, input.groups) {
            (None, Some(_)) if distinct_groups => {
                return Err(Error::config(
                    "critic",
                    "pic",
                    "group embeddings for a heterogeneous team",
                ))
            }
            (Some(_), None) => {
                return Err(Error::config("critic", "pic", "a group assignment for the embedded critic"))
            }
            _ => {}
        }
        let kg = self.embed.map_or(0, |id| self.params.value(id).ncols());
        let mut z = Matrix::zeros((rows, ko + ka + kg));
        z.slice_mut(s![.., ..ko]).assign(input.obs);
        z.slice_mut(s![.., ko..ko + ka]).assign(input.act);
        if let (Some(id), Some(groups)) = (self.embed, input.groups) {
            if groups.len() != input.n_agents {
                return Err(Error::dim("group assignment", &[groups.len()], &[input.n_agents]));
            }
            let table = self.params.value(id);
            for r in 0..rows {
                let g = groups[r % input.n_agents];
                if g >= table.nrows() {
                    return Err(Error::Invalid(format!("group index {g} has no embedding")));
                }
                z.slice_mut(s![r, ko + ka..]).assign(&table.row(g));
            }
        }
        Ok(z)
    }

    pub fn forward(&self, input: &CriticInput<'_>) -> Result<PicCache> {
        let n = input.n_agents;
        let mut h = self.node_input(input)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let c = layer.forward(&self.params, h, n, input.graphs)?;
            h = c.out.clone();
            caches.push(c);
        }
        let (pooled, argmax) = pool_batch(&h, n, self.spec.pooling);
        let head = self.head.forward(&self.params, pooled)?;
        let q = head.out.column(0).to_owned();
        Ok(PicCache {
            q,
            layers: caches,
            argmax,
            head,
            groups: input.groups.map(<[usize]>::to_vec),
            graphs: input.graphs.clone(),
            n,
            version: self.params.version(),
        })
    }

    /// Backpropagates `dq` (one entry per sample). Returns the gradient with
    /// respect to the action block of the node input (`B·N × K_a`).
    pub fn backward(&mut self, cache: &PicCache, dq: &Array1<f64>, mode: BackwardMode) -> Result<Matrix> {
        if cache.version != self.params.version() {
            return Err(Error::StaleCache {
                cached: cache.version,
                current: self.params.version(),
            });
        }
        if dq.len() != cache.q.len() {
            return Err(Error::dim("pic backward", &[dq.len()], &[cache.q.len()]));
        }
        let n = cache.n;
        let dy = dq.clone().insert_axis(Axis(1));
        let dpooled = self.head.backward(&mut self.params, &cache.head, dy, mode);
        let mut g = pool_backward(&dpooled, n, self.spec.pooling, cache.argmax.as_deref());
        for (layer, c) in self.layers.iter().zip(&cache.layers).rev() {
            g = layer.backward(&mut self.params, c, g, n, &cache.graphs, mode);
        }
        let (ko, ka) = (self.spec.obs_dim, self.spec.act_dim);
        if let (Some(id), Some(groups), BackwardMode::Full) = (self.embed, &cache.groups, mode) {
            let dz_embed = g.slice(s![.., ko + ka..]);
            let grad = self.params.grad_mut(id);
            for (r, row) in dz_embed.rows().into_iter().enumerate() {
                let mut dst = grad.row_mut(groups[r % n]);
                dst += &row;
            }
        }
        Ok(g.slice(s![.., ko..ko + ka]).to_owned())
    }
}
