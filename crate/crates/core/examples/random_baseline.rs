//! Mean episode return of a uniformly random joint policy, the reference
//! point for relative-improvement claims.
//!
//! cargo run --release --example random_baseline -- coop_nav 3 1000

use pic::evalstat::{evaluate, RandomPolicy};
use pic::scenarios::{TaskKind, TaskSpec};

fn main() -> pic::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: TaskKind = args.first().map_or(Ok(TaskKind::CoopNav), |s| s.parse())?;
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);

    let task = TaskSpec::new(kind, n)?;
    let returns = evaluate(&RandomPolicy, &task, episodes, 0)?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (returns.len() - 1) as f64;
    println!(
        "{} N={n}: random policy mean return {mean:.3} (sd {:.3}, {episodes} episodes)",
        kind.name(),
        var.sqrt()
    );
    Ok(())
}
