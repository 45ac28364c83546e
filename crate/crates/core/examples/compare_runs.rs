//! Significance table for two sets of runs: t-test and bootstrap interval on
//! the final and absolute metrics.
//!
//! cargo run --release --example compare_runs -- runs/pic runs/mlp
//!
//! Without arguments, two tiny runs are trained into a scratch directory.

use std::path::PathBuf;

use pic::cli::compare_runs;
use pic::critics::CriticKind;
use pic::evalstat::{format_table, TTestKind};
use pic::learner::{train, TrainConfig};

fn main() -> pic::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let (cand, base) = match args.as_slice() {
        [a, b] => (a.clone(), b.clone()),
        _ => {
            let mut out = Vec::new();
            for critic in [CriticKind::Pic, CriticKind::Mlp] {
                let config = TrainConfig {
                    critic,
                    episodes: 60,
                    batch_size: 256,
                    warmup: 256,
                    eval_episodes: 100,
                    ..TrainConfig::default()
                };
                let dir = scratch.path().join(critic.to_string());
                train(&config, &dir)?;
                out.push(dir);
            }
            (out[0].clone(), out[1].clone())
        }
    };
    let reports = compare_runs(&cand, &base, TTestKind::Pooled, 0)?;
    print!("{}", format_table(&reports));
    Ok(())
}
