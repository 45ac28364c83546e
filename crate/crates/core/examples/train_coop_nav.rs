//! Short training run on cooperative navigation, driving the trainer one
//! episode at a time and printing a running reward.
//!
//! cargo run --release --example train_coop_nav -- 1000 pic

use pic::critics::CriticKind;
use pic::evalstat::{evaluate, RandomPolicy};
use pic::learner::{TrainConfig, Trainer};

fn main() -> pic::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let critic: CriticKind = args.next().map_or(Ok(CriticKind::Pic), |s| s.parse())?;

    let config = TrainConfig {
        episodes,
        critic,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(config)?;
    let report = (episodes / 10).max(1);
    let mut window = Vec::new();
    for ep in 1..=episodes {
        let stats = trainer.run_episode()?;
        window.push(stats.reward);
        if ep % report == 0 {
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            println!("episode {ep:>6}  reward {mean:>8.2}  critic loss {:>8.4}", stats.critic_loss);
            window.clear();
        }
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let learned = mean(evaluate(&trainer.policy(), &trainer.task, 200, 1)?);
    let random = mean(evaluate(&RandomPolicy, &trainer.task, 200, 1)?);
    println!("noise-free return {learned:.2} vs random {random:.2}");
    Ok(())
}
