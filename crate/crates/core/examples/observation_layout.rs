//! Prints one agent's observation vector for each task, labelled slot by
//! slot, so the layout can be checked against the environment by eye.

use pic::scenarios::{observe, spawn, TaskKind, TaskSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels(task: &TaskSpec) -> Vec<String> {
    let l = task.layout;
    let mut out = vec!["pos".to_string(), "vel".to_string()];
    if l.push_targets {
        out.push("target-ball".into());
        out.push("ball".into());
    }
    out.extend((0..l.landmarks).map(|k| format!("landmark{k}")));
    out.extend((0..l.agents).map(|k| format!("agent{k}")));
    for k in 0..l.preys {
        out.push(format!("prey{k}"));
        out.push(format!("prey{k}.vel"));
    }
    out
}

fn main() -> pic::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    for kind in TaskKind::ALL {
        let task = TaskSpec::new(kind, n)?;
        let world = spawn(&task, &mut ChaCha8Rng::seed_from_u64(1));
        let o = observe(&world, &task, 0);
        println!("{} N={n}: {} dims", kind.name(), o.len());
        for (label, pair) in labels(&task).iter().zip(o.chunks(2)) {
            println!("  {label:<12} ({:+.3}, {:+.3})", pair[0], pair[1]);
        }
    }
    Ok(())
}
