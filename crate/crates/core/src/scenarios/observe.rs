use super::task::TaskSpec;
use crate::engine::World;
use crate::numerics::Matrix;

/// Up to `k` candidates closest to `from`, nearest first; equal distances
/// go to the lower entity index.
pub(crate) fn nearest(world: &World, from: usize, candidates: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let (x, y) = (world.pos[[from, 0]], world.pos[[from, 1]]);
    let mut scored: Vec<(f64, usize)> = candidates
        .filter(|&c| c != from)
        .map(|c| {
            let dx = world.pos[[c, 0]] - x;
            let dy = world.pos[[c, 1]] - y;
            (dx * dx + dy * dy, c)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    scored.into_iter().map(|(_, c)| c).collect()
}

fn push_offset(out: &mut [f64], at: &mut usize, world: &World, from: usize, to: usize) {
    out[*at] = world.pos[[to, 0]] - world.pos[[from, 0]];
    out[*at + 1] = world.pos[[to, 1]] - world.pos[[from, 1]];
    *at += 2;
}

/// Writes agent `i`'s observation into `out` (length `task.obs_dim()`).
pub fn observe_into(world: &World, task: &TaskSpec, i: usize, out: &mut [f64]) {
    assert!(i < task.n_agents, "agent index {i} out of range");
    assert_eq!(out.len(), task.obs_dim());
    out.fill(0.0);
    let layout = task.layout;
    out[0] = world.pos[[i, 0]];
    out[1] = world.pos[[i, 1]];
    out[2] = world.vel[[i, 0]];
    out[3] = world.vel[[i, 1]];
    let mut at = 4;

    if layout.push_targets {
        let target = task.landmark_range().start;
        let ball = task.ball_index().expect("push task has a ball");
        push_offset(out, &mut at, world, i, target);
        push_offset(out, &mut at, world, i, ball);
    }

    let landmarks = nearest(world, i, task.landmark_range(), layout.landmarks);
    for (slot, &l) in landmarks.iter().enumerate() {
        let mut p = at + 2 * slot;
        push_offset(out, &mut p, world, i, l);
    }
    at += 2 * layout.landmarks;

    let agents = nearest(world, i, 0..task.n_agents, layout.agents);
    for (slot, &j) in agents.iter().enumerate() {
        let mut p = at + 2 * slot;
        push_offset(out, &mut p, world, i, j);
    }
    at += 2 * layout.agents;

    let preys = nearest(world, i, task.prey_range(), layout.preys);
    for (slot, &j) in preys.iter().enumerate() {
        let mut p = at + 4 * slot;
        push_offset(out, &mut p, world, i, j);
        out[p] = world.vel[[j, 0]];
        out[p + 1] = world.vel[[j, 1]];
    }
    at += 4 * layout.preys;
    debug_assert_eq!(at, out.len());
}

pub fn observe(world: &World, task: &TaskSpec, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; task.obs_dim()];
    observe_into(world, task, i, &mut out);
    out
}

/// Observations of every learned agent, one row each.
pub fn observe_all(world: &World, task: &TaskSpec) -> Matrix {
    let d = task.obs_dim();
    let mut m = Matrix::zeros((task.n_agents, d));
    for i in 0..task.n_agents {
        let mut row = m.row_mut(i);
        observe_into(world, task, i, row.as_slice_mut().expect("row-major"));
    }
    m
}
