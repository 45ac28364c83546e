use super::world::{JointAction, World};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Floor applied to centre distances so coincident particles do not divide by zero.
pub const COINCIDENT_FLOOR: f64 = 1e-9;

/// Contacts whose surface gap exceeds this many softness margins are skipped:
/// the softened force there is below `scale * margin * exp(-50)`, far under
/// any tolerance we compare at.
const CUTOFF_MARGINS: f64 = 50.0;

/// Which collision routine [`step_with`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepPath {
    Vectorized,
    Reference,
}

/// Maps action rows onto planar forces. Returns the forces and whether any
/// entry had to be clamped into `[0, 1]`.
pub fn action_to_force(actions: &JointAction, world: &World) -> Result<(Matrix, bool)> {
    let a = actions.matrix();
    if a.nrows() != world.n_agents {
        return Err(Error::dim("action rows", &[a.nrows()], &[world.n_agents]));
    }
    let mut clamped = false;
    let mut forces = Matrix::zeros((world.n_agents, 2));
    for (i, row) in a.rows().into_iter().enumerate() {
        let mut ch = [0.0; 5];
        for (k, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("action of agent {i}")));
            }
            let c = v.clamp(0.0, 1.0);
            clamped |= c != v;
            ch[k] = c;
        }
        let s = world.bodies[i].sensitivity;
        forces[[i, 0]] = s * (ch[2] - ch[1]);
        forces[[i, 1]] = s * (ch[3] - ch[4]);
    }
    Ok((forces, clamped))
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Pairwise softened contact forces, computed row-block by row-block over
/// structure-of-arrays coordinates.
///
/// Each row first evaluates squared distances to all later entities in one
/// contiguous pass, then only the pairs inside contact reach pay for the
/// square root and the softplus.
pub fn collision_forces(world: &World) -> Matrix {
    let e = world.n_entities();
    let phys = world.physics;
    let ids: Vec<usize> = (0..e).filter(|&i| world.bodies[i].collide).collect();
    let m = ids.len();
    let xs: Vec<f64> = ids.iter().map(|&i| world.pos[[i, 0]]).collect();
    let ys: Vec<f64> = ids.iter().map(|&i| world.pos[[i, 1]]).collect();
    let rs: Vec<f64> = ids.iter().map(|&i| world.bodies[i].radius).collect();
    let movable: Vec<bool> = ids.iter().map(|&i| world.bodies[i].movable).collect();

    let cutoff = CUTOFF_MARGINS * phys.contact_margin;
    let mut fx = vec![0.0; m];
    let mut fy = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    let mut reach2 = vec![0.0; m];

    for a in 0..m {
        let (xa, ya, ra) = (xs[a], ys[a], rs[a]);
        let tail = a + 1..m;
        for (((d, r), (&x, &y)), &rb) in d2[tail.clone()]
            .iter_mut()
            .zip(&mut reach2[tail.clone()])
            .zip(xs[tail.clone()].iter().zip(&ys[tail.clone()]))
            .zip(&rs[tail.clone()])
        {
            let dx = x - xa;
            let dy = y - ya;
            *d = dx * dx + dy * dy;
            let reach = ra + rb + cutoff;
            *r = reach * reach;
        }
        for b in tail {
            if d2[b] >= reach2[b] || !(movable[a] || movable[b]) {
                continue;
            }
            let dx = xa - xs[b];
            let dy = ya - ys[b];
            let dist = d2[b].sqrt().max(COINCIDENT_FLOOR);
            let k = phys.contact_margin;
            let pen = k * softplus((ra + rs[b] - dist) / k);
            let scale = phys.contact_force * pen / dist;
            let (f_x, f_y) = (scale * dx, scale * dy);
            fx[a] += f_x;
            fy[a] += f_y;
            fx[b] -= f_x;
            fy[b] -= f_y;
        }
    }

    let mut out = Matrix::zeros((e, 2));
    for (k, &i) in ids.iter().enumerate() {
        out[[i, 0]] = fx[k];
        out[[i, 1]] = fy[k];
    }
    out
}

/// Straightforward double loop over ordered pairs. Test and benchmark
/// baseline for [`collision_forces`].
pub fn reference_collision_oracle(world: &World) -> Matrix {
    let e = world.n_entities();
    let phys = world.physics;
    let mut out = Matrix::zeros((e, 2));
    for i in 0..e {
        for j in 0..e {
            let (bi, bj) = (&world.bodies[i], &world.bodies[j]);
            if i == j || !bi.collide || !bj.collide || !(bi.movable || bj.movable) {
                continue;
            }
            let dx = world.pos[[i, 0]] - world.pos[[j, 0]];
            let dy = world.pos[[i, 1]] - world.pos[[j, 1]];
            let dist = (dx * dx + dy * dy).sqrt().max(COINCIDENT_FLOOR);
            let k = phys.contact_margin;
            let pen = k * (1.0 + ((bi.radius + bj.radius - dist) / k).exp()).ln();
            out[[i, 0]] += phys.contact_force * pen * dx / dist;
            out[[i, 1]] += phys.contact_force * pen * dy / dist;
        }
    }
    out
}

/// Damped semi-implicit Euler update with per-entity speed limits.
pub fn integrate(world: &World, forces: &Matrix, dt: f64) -> Result<World> {
    let mut next = world.clone();
    integrate_in_place(&mut next, forces, dt)?;
    Ok(next)
}

pub fn integrate_in_place(world: &mut World, forces: &Matrix, dt: f64) -> Result<()> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    let e = world.n_entities();
    if forces.shape() != [e, 2] {
        return Err(Error::dim("integrate forces", forces.shape(), &[e, 2]));
    }
    for i in 0..e {
        if !(forces[[i, 0]].is_finite() && forces[[i, 1]].is_finite()) {
            return Err(Error::NonFinite(format!("force on entity {i}")));
        }
    }
    let keep = 1.0 - world.physics.damping;
    for i in 0..e {
        let body = world.bodies[i];
        if !body.movable {
            continue;
        }
        let mut vx = world.vel[[i, 0]] * keep + forces[[i, 0]] / body.mass * dt;
        let mut vy = world.vel[[i, 1]] * keep + forces[[i, 1]] / body.mass * dt;
        let speed = (vx * vx + vy * vy).sqrt();
        if speed > body.max_speed {
            vx = vx / speed * body.max_speed;
            vy = vy / speed * body.max_speed;
        }
        world.vel[[i, 0]] = vx;
        world.vel[[i, 1]] = vy;
        world.pos[[i, 0]] += vx * dt;
        world.pos[[i, 1]] += vy * dt;
    }
    Ok(())
}

/// Advances the world by one tick.
pub fn step(world: &World, actions: &JointAction) -> Result<World> {
    let mut next = world.clone();
    step_in_place(&mut next, actions)?;
    Ok(next)
}

pub fn step_in_place(world: &mut World, actions: &JointAction) -> Result<()> {
    step_with(world, actions, StepPath::Vectorized)
}

pub fn step_with(world: &mut World, actions: &JointAction, path: StepPath) -> Result<()> {
    let (act, clamped) = action_to_force(actions, world)?;
    if clamped && !world.clamp_logged {
        log::warn!("action entries outside [0, 1] were clamped");
        world.clamp_logged = true;
    }
    let mut forces = match path {
        StepPath::Vectorized => collision_forces(world),
        StepPath::Reference => reference_collision_oracle(world),
    };
    for i in 0..world.n_agents {
        forces[[i, 0]] += act[[i, 0]];
        forces[[i, 1]] += act[[i, 1]];
    }
    let dt = world.physics.dt;
    integrate_in_place(world, &forces, dt)?;
    world.steps += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::world::Body;
    use super::*;
    use ndarray::array;

    fn pair(dx: f64) -> World {
        World::new(
            vec![Body::agent(0.15), Body::agent(0.15)],
            2,
            array![[0.0, 0.0], [dx, 0.0]],
        )
        .unwrap()
    }

    fn single() -> World {
        World::new(vec![Body::agent(0.1)], 1, array![[0.0, 0.0]]).unwrap()
    }

    fn act(rows: &[[f64; 5]]) -> JointAction {
        let m = Matrix::from_shape_vec((rows.len(), 5), rows.iter().flatten().copied().collect()).unwrap();
        JointAction::new(m).unwrap()
    }

    #[test]
    fn action_channels() {
        let w = single();
        let (f, _) = action_to_force(&act(&[[0.0; 5]]), &w).unwrap();
        assert_eq!(f, array![[0.0, 0.0]]);
        let (f, _) = action_to_force(&act(&[[0.0, 1.0, 0.0, 0.0, 0.0]]), &w).unwrap();
        assert_eq!(f, array![[-1.0, 0.0]]);
        let (f, _) = action_to_force(&act(&[[0.0, 0.5, 0.5, 0.0, 0.0]]), &w).unwrap();
        assert_eq!(f, array![[0.0, 0.0]]);
        let (f, _) = action_to_force(&act(&[[0.0, 0.0, 0.0, 1.0, 0.0]]), &w).unwrap();
        assert_eq!(f, array![[0.0, 1.0]]);
    }

    #[test]
    fn out_of_range_actions_are_clamped() {
        let w = single();
        let (f, clamped) = action_to_force(&act(&[[0.0, 0.0, 3.0, 0.0, -2.0]]), &w).unwrap();
        assert!(clamped);
        assert_eq!(f, array![[1.0, 0.0]]);
    }

    #[test]
    fn action_row_count_checked() {
        assert!(action_to_force(&JointAction::zeros(2), &single()).is_err());
    }

    #[test]
    fn distant_pair_has_negligible_force() {
        let f = collision_forces(&pair(1.0));
        assert!(f.iter().all(|v| v.abs() < 1e-6));
        let g = reference_collision_oracle(&pair(1.0));
        assert!(g.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn overlapping_pair_repels_along_x() {
        let f = collision_forces(&pair(0.2));
        assert!(f[[0, 0]] < 0.0 && f[[1, 0]] > 0.0);
        assert_eq!(f[[0, 0]], -f[[1, 0]]);
        assert_eq!(f[[0, 1]], 0.0);
        assert_eq!(f[[1, 1]], 0.0);
    }

    #[test]
    fn coincident_centres_stay_finite() {
        let f = collision_forces(&pair(0.0));
        assert!(f.iter().all(|v| v.is_finite()));
        let g = reference_collision_oracle(&pair(0.0));
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn damping_update() {
        let mut w = single();
        w.vel[[0, 0]] = 1.0;
        let next = integrate(&w, &Matrix::zeros((1, 2)), 0.1).unwrap();
        assert!((next.vel[[0, 0]] - 0.75).abs() < 1e-15);
        assert!((next.pos[[0, 0]] - 0.075).abs() < 1e-15);
        assert_eq!(next.pos[[0, 1]], 0.0);
    }

    #[test]
    fn immovable_ignores_force() {
        let w = World::new(vec![Body::agent(0.1), Body::landmark(0.05)], 1, array![[0.0, 0.0], [0.5, 0.5]]).unwrap();
        let next = integrate(&w, &array![[0.0, 0.0], [100.0, -50.0]], 0.1).unwrap();
        assert_eq!(next.pos.row(1), w.pos.row(1));
    }

    #[test]
    fn speed_clamp() {
        let mut w = single();
        w.bodies[0].max_speed = 0.5;
        let next = integrate(&w, &array![[30.0, 40.0]], 0.1).unwrap();
        let speed = next.vel.row(0).dot(&next.vel.row(0)).sqrt();
        assert!((speed - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_finite_force_names_entity() {
        let err = integrate(&pair(1.0), &array![[0.0, 0.0], [f64::NAN, 0.0]], 0.1).unwrap_err();
        assert!(err.to_string().contains("entity 1"));
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let w = pair(1.0);
        let next = step(&w, &JointAction::zeros(2)).unwrap();
        assert_eq!(next.pos, w.pos);
        assert_eq!(next.vel, w.vel);
        assert_eq!(next.steps, 1);
    }

    #[test]
    fn forward_action_moves_up() {
        let mut w = single();
        let a = act(&[[0.0, 0.0, 0.0, 1.0, 0.0]]);
        let mut last = w.pos[[0, 1]];
        for _ in 0..20 {
            step_in_place(&mut w, &a).unwrap();
            assert!(w.pos[[0, 1]] > last);
            last = w.pos[[0, 1]];
        }
    }
}
