//! A graph critic scores a team the same way no matter how its agents are
//! numbered. This shuffles the agents of a random state and prints both
//! values, next to a plain MLP critic that lacks the property.

use pic::critics::{CriticInput, Graphs, MlpCritic, PicCritic, PicSpec, Pooling};
use pic::numerics::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permute(m: &Matrix, perm: &[usize]) -> Matrix {
    Matrix::from_shape_fn(m.dim(), |(r, c)| m[[perm[r], c]])
}

fn values(pic: &PicCritic, mlp: &MlpCritic, obs: &Matrix, act: &Matrix) -> pic::Result<(f64, f64)> {
    let input = CriticInput {
        obs,
        act,
        n_agents: obs.nrows(),
        groups: None,
        graphs: &Graphs::Full,
    };
    Ok((pic.forward(&input)?.q()[0], mlp.forward(&input)?.q()[0]))
}

fn main() -> pic::Result<()> {
    let (n, obs_dim) = (6, 26);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = PicSpec {
        obs_dim,
        act_dim: 5,
        hidden: vec![128, 128],
        pooling: Pooling::Max,
        groups: None,
    };
    let pic = PicCritic::new(spec, &mut rng);
    let mlp = MlpCritic::new(n, obs_dim, 5, &[128, 128], &mut rng);

    let obs = Matrix::from_shape_simple_fn((n, obs_dim), || rng.random_range(-1.0..1.0));
    let act = Matrix::from_shape_simple_fn((n, 5), || rng.random_range(0.0..1.0));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let (pic_a, mlp_a) = values(&pic, &mlp, &obs, &act)?;
    let (pic_b, mlp_b) = values(&pic, &mlp, &permute(&obs, &perm), &permute(&act, &perm))?;
    println!("agent order {perm:?}");
    println!("graph critic: {pic_a:+.12} -> {pic_b:+.12} (diff {:.1e})", (pic_a - pic_b).abs());
    println!("mlp critic:   {mlp_a:+.12} -> {mlp_b:+.12} (diff {:.1e})", (mlp_a - mlp_b).abs());
    Ok(())
}
