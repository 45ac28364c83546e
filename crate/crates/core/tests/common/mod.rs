#![allow(dead_code)]

use ndarray::Array1;
use pic::critics::{CriticInput, CriticNet, Graphs};
use pic::engine::{Body, World};
use pic::learner::Actor;
use pic::numerics::{grad_check, BackwardMode, Matrix, ParamSet};
use rand::Rng;

/// Smallest distance from a ReLU hinge or max-pool tie that a grad-check
/// instance must keep; closer draws are rejected.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn rand_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

pub fn rand_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.random_range(lo..hi))
}

/// Uniform random permutation of `0..n`.
pub fn rand_perm<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Rows of each `n`-row block reordered: new row `k` is old row `perm[k]`.
pub fn permute_rows(m: &Matrix, n: usize, perm: &[usize]) -> Matrix {
    let mut out = m.clone();
    for b in 0..m.nrows() / n {
        for (k, &p) in perm.iter().enumerate() {
            out.row_mut(b * n + k).assign(&m.row(b * n + p));
        }
    }
    out
}

/// Max relative gradient error of `Σ_b c_b·Q_b` over all critic
/// parameters, or `None` if the draw sits too close to a kink.
pub fn critic_grad_error(
    critic: &mut CriticNet,
    obs: &Matrix,
    act: &Matrix,
    n: usize,
    groups: Option<&[usize]>,
    weights: &Array1<f64>,
) -> Option<f64> {
    let graphs = Graphs::Full;
    let input = CriticInput {
        obs,
        act,
        n_agents: n,
        groups,
        graphs: &graphs,
    };
    let cache = critic.forward(&input).unwrap();
    if cache.kink_margin() < KINK_MARGIN {
        return None;
    }
    critic.params_mut().zero_grad();
    critic.backward(&cache, weights, BackwardMode::Full).unwrap();
    let mut work = critic.clone();
    let f = |p: &ParamSet| {
        work.params_mut().copy_values_from(p).unwrap();
        work.q(&input).unwrap().dot(weights)
    };
    Some(grad_check(f, critic.params(), 1e-5))
}

/// Max relative gradient error of `Σ c ∘ μ(obs)` over the actor parameters.
pub fn actor_grad_error(actor: &mut Actor, obs: &Matrix, weights: &Matrix) -> Option<f64> {
    let cache = actor.forward(obs.clone()).unwrap();
    let layers = cache.layers();
    let margin = layers[..layers.len() - 1]
        .iter()
        .flat_map(|c| c.pre.iter())
        .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if margin < KINK_MARGIN {
        return None;
    }
    actor.params.zero_grad();
    actor
        .net
        .backward(&mut actor.params, &cache, weights.clone(), BackwardMode::Full)
        .unwrap();
    let net = actor.net.clone();
    let f = |p: &ParamSet| (net.predict(p, obs).unwrap() * weights).sum();
    Some(grad_check(f, &actor.params, 1e-5))
}

/// `n` colliding agents packed into a box small enough that many overlap.
pub fn crowded_world<R: Rng>(rng: &mut R, n: usize) -> World {
    let radius = 0.15;
    let half = (n as f64).sqrt() * radius * 0.9;
    let mut bodies: Vec<Body> = (0..n).map(|_| Body::agent(rng.random_range(0.05..radius))).collect();
    bodies.push(Body::landmark(0.05));
    let pos = rand_matrix(rng, n + 1, 2, -half, half);
    let mut w = World::new(bodies, n, pos).unwrap();
    w.vel = rand_matrix(rng, n + 1, 2, -0.5, 0.5);
    w.vel.row_mut(n).fill(0.0);
    w
}
