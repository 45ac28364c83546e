//! Central-difference check of the hand-written backward passes: actor,
//! MLP critic, and graph critic with group embeddings.

use ndarray::Array1;
use pic::critics::{CriticInput, CriticNet, Graphs, MlpCritic, PicCritic, PicSpec, Pooling};
use pic::learner::Actor;
use pic::numerics::{grad_check, BackwardMode, Matrix, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

/// Relative error and distance to the nearest kink for `Σ c_b·Q_b`.
fn critic_error(critic: &mut CriticNet, obs: &Matrix, act: &Matrix, n: usize, groups: Option<&[usize]>) -> (f64, f64) {
    let input = CriticInput {
        obs,
        act,
        n_agents: n,
        groups,
        graphs: &Graphs::Full,
    };
    let c = Array1::from_elem(obs.nrows() / n, 1.0);
    let cache = critic.forward(&input).unwrap();
    critic.params_mut().zero_grad();
    critic.backward(&cache, &c, BackwardMode::Full).unwrap();
    let mut probe = critic.clone();
    let err = grad_check(
        |p: &ParamSet| {
            probe.params_mut().copy_values_from(p).unwrap();
            probe.q(&input).unwrap().sum()
        },
        critic.params(),
        1e-5,
    );
    (err, cache.kink_margin())
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..5 {
        let mut actor = Actor::new(6, 5, &[16, 16], &mut rng);
        let obs = random(&mut rng, 4, 6, -1.0, 1.0);
        let cache = actor.forward(obs.clone()).unwrap();
        actor.params.zero_grad();
        let ones = Matrix::ones((4, 5));
        actor.net.backward(&mut actor.params, &cache, ones, BackwardMode::Full).unwrap();
        let net = actor.net.clone();
        let actor_err = grad_check(|p: &ParamSet| net.predict(p, &obs).unwrap().sum(), &actor.params, 1e-5);

        let n = 4;
        let mut mlp = CriticNet::Mlp(MlpCritic::new(n, 4, 5, &[16, 16], &mut rng));
        let spec = PicSpec {
            obs_dim: 4,
            act_dim: 5,
            hidden: vec![16, 16],
            pooling: Pooling::Max,
            groups: Some((2, 2)),
        };
        let mut graph = CriticNet::Pic(PicCritic::new(spec, &mut rng));
        let o = random(&mut rng, 2 * n, 4, -1.0, 1.0);
        let a = random(&mut rng, 2 * n, 5, 0.0, 1.0);
        let (mlp_err, mlp_margin) = critic_error(&mut mlp, &o, &a, n, None);
        let (pic_err, pic_margin) = critic_error(&mut graph, &o, &a, n, Some(&[0, 0, 1, 1]));
        println!(
            "trial {trial}: actor {actor_err:.1e}  mlp {mlp_err:.1e} (kink margin {mlp_margin:.1e})  \
             graph {pic_err:.1e} (kink margin {pic_margin:.1e})"
        );
    }
}
