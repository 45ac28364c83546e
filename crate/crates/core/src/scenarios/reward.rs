use rand::Rng;

use super::observe::nearest;
use super::task::{TaskKind, TaskSpec};
use crate::engine::{World, ACTION_DIM};

fn coverage_distance(world: &World, task: &TaskSpec) -> f64 {
    task.landmark_range()
        .map(|l| {
            (0..task.n_agents)
                .map(|a| world.distance(a, l))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn colliding_pairs(world: &World, n: usize, mut keep: impl FnMut(usize, usize) -> bool) -> usize {
    let mut count = 0;
    for a in 0..n {
        for b in a + 1..n {
            if keep(a, b) && world.touching(a, b) {
                count += 1;
            }
        }
    }
    count
}

/// The shared team reward, evaluated once and handed to every learned agent.
pub fn shared_reward(world: &World, task: &TaskSpec) -> f64 {
    let c = task.rewards;
    let n = task.n_agents;
    match task.kind {
        TaskKind::CoopNav => {
            -coverage_distance(world, task) - c.collision * colliding_pairs(world, n, |_, _| true) as f64
        }
        TaskKind::HeteroNav => {
            let groups = task.group_assignment();
            -coverage_distance(world, task)
                - c.collision * colliding_pairs(world, n, |_, _| true) as f64
                - c.cross_group * colliding_pairs(world, n, |a, b| groups[a] != groups[b]) as f64
        }
        TaskKind::PreyPredator => {
            let mut contacts = 0;
            for p in 0..n {
                for q in task.prey_range() {
                    if world.touching(p, q) {
                        contacts += 1;
                    }
                }
            }
            c.capture * contacts as f64
        }
        TaskKind::CoopPush => {
            let ball = task.ball_index().expect("push task has a ball");
            let target = task.landmark_range().start;
            let closest = (0..n).map(|a| world.distance(a, ball)).fold(f64::INFINITY, f64::min);
            -world.distance(ball, target) - c.push_agent * closest
        }
    }
}

/// Per-agent rewards: the shared scalar broadcast to all learned agents.
pub fn global_reward(world: &World, task: &TaskSpec) -> Vec<f64> {
    vec![shared_reward(world, task); task.n_agents]
}

/// Scripted flee policy for prey `m` (0-based among preys): full force
/// directly away from the nearest predator.
pub fn prey_action<R: Rng + ?Sized>(world: &World, task: &TaskSpec, m: usize, rng: &mut R) -> [f64; ACTION_DIM] {
    let noop = [1.0, 0.0, 0.0, 0.0, 0.0];
    let me = task.prey_range().start + m;
    let Some(&pred) = nearest(world, me, 0..task.n_agents, 1).first() else {
        return noop;
    };
    let mut dx = world.pos[[me, 0]] - world.pos[[pred, 0]];
    let mut dy = world.pos[[me, 1]] - world.pos[[pred, 1]];
    if dx.hypot(dy) < crate::engine::COINCIDENT_FLOOR {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        dx = angle.cos();
        dy = angle.sin();
    }
    let scale = dx.abs().max(dy.abs());
    let (ux, uy) = (dx / scale, dy / scale);
    [0.0, (-ux).max(0.0), ux.max(0.0), uy.max(0.0), (-uy).max(0.0)]
}
