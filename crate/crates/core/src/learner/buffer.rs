use ndarray::s;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One joint environment step. Row `i` of each matrix belongs to agent `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Matrix,
    pub act: Matrix,
    pub rew: Vec<f64>,
    pub next_obs: Matrix,
    pub done: bool,
}

/// A sampled minibatch in stacked layout: observation and action rows
/// `b·N + i`, reward matrix `B × N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub n_agents: usize,
    pub obs: Matrix,
    pub act: Matrix,
    pub rew: Matrix,
    pub next_obs: Matrix,
    pub done: Vec<bool>,
    /// Actions of the target actors on `next_obs`, filled in before the
    /// critic update.
    pub next_act: Option<Matrix>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    /// Rows `b·N + i` for all `b`: agent `i`'s slice of a stacked matrix.
    pub fn agent_rows(m: &Matrix, n: usize, i: usize) -> Matrix {
        m.slice(s![i..;n, ..]).to_owned()
    }
}

/// Fixed-capacity ring of transitions stored as flat rows. Memory grows with
/// use, up to the capacity.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    n_agents: usize,
    obs_dim: usize,
    act_dim: usize,
    obs: Vec<f64>,
    act: Vec<f64>,
    rew: Vec<f64>,
    next_obs: Vec<f64>,
    done: Vec<bool>,
    cursor: usize,
    size: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, n_agents: usize, obs_dim: usize, act_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            n_agents,
            obs_dim,
            act_dim,
            obs: Vec::new(),
            act: Vec::new(),
            rew: Vec::new(),
            next_obs: Vec::new(),
            done: Vec::new(),
            cursor: 0,
            size: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) -> Result<()> {
        let n = self.n_agents;
        if t.obs.shape() != [n, self.obs_dim] || t.next_obs.shape() != [n, self.obs_dim] {
            return Err(Error::dim("transition observations", t.obs.shape(), &[n, self.obs_dim]));
        }
        if t.act.shape() != [n, self.act_dim] {
            return Err(Error::dim("transition actions", t.act.shape(), &[n, self.act_dim]));
        }
        if t.rew.len() != n {
            return Err(Error::dim("transition rewards", &[t.rew.len()], &[n]));
        }
        if t.rew.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("transition reward".into()));
        }
        let fields: [(&mut Vec<f64>, &Matrix); 3] =
            [(&mut self.obs, &t.obs), (&mut self.act, &t.act), (&mut self.next_obs, &t.next_obs)];
        if self.size < self.capacity {
            for (dst, src) in fields {
                dst.extend(src.iter());
            }
            self.rew.extend_from_slice(&t.rew);
            self.done.push(t.done);
            self.size += 1;
        } else {
            let c = self.cursor;
            for (dst, src) in fields {
                let w = src.len();
                for (d, &v) in dst[c * w..(c + 1) * w].iter_mut().zip(src.iter()) {
                    *d = v;
                }
            }
            self.rew[c * n..(c + 1) * n].copy_from_slice(&t.rew);
            self.done[c] = t.done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Uniform indices, with replacement, over the stored transitions.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch == 0 || self.size < batch {
            return Err(Error::Underfull {
                size: self.size,
                batch,
            });
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.size)).collect())
    }

    pub fn gather(&self, idx: &[usize]) -> Batch {
        let n = self.n_agents;
        let b = idx.len();
        let take = |src: &[f64], width: usize| {
            let mut out = Vec::with_capacity(b * width);
            for &k in idx {
                out.extend_from_slice(&src[k * width..(k + 1) * width]);
            }
            Matrix::from_shape_vec((b * n, width / n), out).expect("sized above")
        };
        let rew = {
            let mut out = Vec::with_capacity(b * n);
            for &k in idx {
                out.extend_from_slice(&self.rew[k * n..(k + 1) * n]);
            }
            Matrix::from_shape_vec((b, n), out).expect("sized above")
        };
        Batch {
            n_agents: n,
            obs: take(&self.obs, n * self.obs_dim),
            act: take(&self.act, n * self.act_dim),
            rew,
            next_obs: take(&self.next_obs, n * self.obs_dim),
            done: idx.iter().map(|&k| self.done[k]).collect(),
            next_act: None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(batch, rng)?;
        Ok(self.gather(&idx))
    }

    /// The stored transition at ring slot `k`.
    pub fn get(&self, k: usize) -> Option<Transition> {
        if k >= self.size {
            return None;
        }
        let b = self.gather(&[k]);
        Some(Transition {
            obs: b.obs,
            act: b.act,
            rew: b.rew.row(0).to_vec(),
            next_obs: b.next_obs,
            done: b.done[0],
        })
    }
}
