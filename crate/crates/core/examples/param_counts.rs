//! Trainable parameters of the two critics as the team grows. The graph
//! critic's count is flat; the MLP critic's grows with every agent.

use pic::critics::{mlp_critic_param_count, PicSpec, Pooling};
use pic::scenarios::{TaskKind, TaskSpec};

fn main() -> pic::Result<()> {
    println!("{:>5}  {:>6}  {:>12}  {:>12}", "N", "obs", "graph critic", "mlp critic");
    for n in [3, 6, 15, 30, 100, 200] {
        let obs_dim = TaskSpec::new(TaskKind::CoopNav, n)?.obs_dim();
        let pic = PicSpec {
            obs_dim,
            act_dim: 5,
            hidden: vec![128, 128],
            pooling: Pooling::Max,
            groups: None,
        }
        .param_count();
        let mlp = mlp_critic_param_count(n, obs_dim, 5, &[128, 128]);
        println!("{n:>5}  {obs_dim:>6}  {pic:>12}  {mlp:>12}");
    }
    Ok(())
}
