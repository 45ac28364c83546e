//! Physics throughput of the vectorized contact routine against the
//! per-pair reference loop, plus a check that both agree.
//!
//! cargo run --release --example particle_bench -- 10 50 100 200

use pic::cli::bench_physics;
use pic::engine::{collision_forces, reference_collision_oracle};
use pic::scenarios::{spawn, TaskKind, TaskSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pic::Result<()> {
    let sizes: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sizes = if sizes.is_empty() { vec![10, 50, 100, 200] } else { sizes };
    println!("{:>5}  {:>12}  {:>12}  {:>8}  {:>10}", "N", "fast step/s", "ref step/s", "speedup", "max diff");
    for n in sizes {
        let task = TaskSpec::new(TaskKind::CoopNav, n)?;
        let world = spawn(&task, &mut ChaCha8Rng::seed_from_u64(n as u64));
        let diff = (&collision_forces(&world) - &reference_collision_oracle(&world))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let row = bench_physics(n, 200, 0)?;
        println!(
            "{n:>5}  {:>12.0}  {:>12.0}  {:>7.1}x  {diff:>10.1e}",
            row.vectorized_sps,
            row.reference_sps,
            row.vectorized_sps / row.reference_sps
        );
    }
    Ok(())
}
