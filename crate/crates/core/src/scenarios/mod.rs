//! The four benchmark tasks: spawning, observations, shared rewards, and
//! the scripted prey.

mod observe;
mod reward;
mod task;

use ndarray::Array2;
use rand::Rng;

pub use observe::{observe, observe_all, observe_into};
pub use reward::{global_reward, prey_action, shared_reward};
pub use task::{Group, ObsLayout, RewardCoefs, TaskKind, TaskSpec};

use crate::engine::{self, JointAction, World, ACTION_DIM};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Places every entity uniformly in `[-1, 1]^2` with zero velocity.
pub fn spawn<R: Rng + ?Sized>(task: &TaskSpec, rng: &mut R) -> World {
    let e = task.n_entities();
    let pos = Array2::from_shape_simple_fn((e, 2), || rng.random_range(-1.0..1.0));
    World::new(task.bodies(), task.n_actuated(), pos).expect("task layout is consistent")
}

/// One running episode of a task.
#[derive(Clone, Debug)]
pub struct Env {
    pub task: TaskSpec,
    pub world: World,
}

impl Env {
    pub fn reset<R: Rng + ?Sized>(task: &TaskSpec, rng: &mut R) -> Env {
        Env {
            task: task.clone(),
            world: spawn(task, rng),
        }
    }

    pub fn observations(&self) -> Matrix {
        observe_all(&self.world, &self.task)
    }

    /// Applies the learned agents' actions (one row each), lets scripted
    /// preys act, advances physics, and returns the per-agent rewards.
    pub fn step<R: Rng + ?Sized>(&mut self, actions: &Matrix, rng: &mut R) -> Result<Vec<f64>> {
        let n = self.task.n_agents;
        if actions.shape() != [n, ACTION_DIM] {
            return Err(Error::dim("agent actions", actions.shape(), &[n, ACTION_DIM]));
        }
        let mut joint = JointAction::zeros(self.task.n_actuated());
        {
            let m = joint.matrix_mut();
            m.slice_mut(ndarray::s![..n, ..]).assign(actions);
            for p in 0..self.task.n_preys {
                let row = prey_action(&self.world, &self.task, p, rng);
                for (k, v) in row.into_iter().enumerate() {
                    m[[n + p, k]] = v;
                }
            }
        }
        engine::step_in_place(&mut self.world, &joint)?;
        Ok(global_reward(&self.world, &self.task))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_spawn_is_reproducible() {
        let task = TaskSpec::new(TaskKind::CoopNav, 3).unwrap();
        let a = spawn(&task, &mut ChaCha8Rng::seed_from_u64(7));
        let b = spawn(&task, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!(a.pos.iter().all(|v| (-1.0..1.0).contains(v)));
        assert!(a.vel.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coop_nav_has_one_landmark_per_agent() {
        let task = TaskSpec::new(TaskKind::CoopNav, 3).unwrap();
        let w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(w.n_agents, 3);
        assert_eq!(task.landmark_range().len(), 3);
        assert_eq!(w.n_entities(), 6);
    }

    #[test]
    fn hetero_spawn_uses_group_bodies() {
        let task = TaskSpec::new(TaskKind::HeteroNav, 4).unwrap();
        let w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(1));
        let radii: Vec<f64> = w.bodies[..4].iter().map(|b| b.radius).collect();
        assert_eq!(radii, vec![0.05, 0.05, 0.15, 0.15]);
        assert!(w.bodies[0].sensitivity > w.bodies[2].sensitivity);
    }

    fn coop_nav_world(agents: &[[f64; 2]], landmarks: &[[f64; 2]]) -> (TaskSpec, World) {
        let task = TaskSpec::new(TaskKind::CoopNav, agents.len()).unwrap();
        let mut w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(0));
        for (i, p) in agents.iter().chain(landmarks).enumerate() {
            w.pos[[i, 0]] = p[0];
            w.pos[[i, 1]] = p[1];
        }
        (task, w)
    }

    #[test]
    fn relative_landmark_offset() {
        let (task, w) = coop_nav_world(
            &[[0.0, 0.0], [5.0, 5.0], [-5.0, 5.0]],
            &[[1.0, 1.0], [9.0, 9.0], [-9.0, 9.0]],
        );
        let o = observe(&w, &task, 0);
        assert_eq!(o.len(), 14);
        assert_eq!(&o[4..6], &[1.0, 1.0]);
    }

    #[test]
    fn observation_sorted_by_distance_not_index() {
        let (task, w) = coop_nav_world(
            &[[0.0, 0.0], [0.9, 0.0], [0.0, 0.4]],
            &[[1.0, 1.0], [-0.5, 0.0], [0.3, 0.0]],
        );
        let o = observe(&w, &task, 0);
        // landmarks nearest first: (0.3,0), (-0.5,0), (1,1)
        assert_eq!(&o[4..10], &[0.3, 0.0, -0.5, 0.0, 1.0, 1.0]);
        // agents nearest first: agent 2 then agent 1
        assert_eq!(&o[10..14], &[0.0, 0.4, 0.9, 0.0]);

        let swapped = w.permute_agents(&[0, 2, 1]);
        assert_eq!(observe(&swapped, &task, 0), o);
    }

    #[test]
    fn equal_distances_prefer_lower_index() {
        let (task, w) = coop_nav_world(
            &[[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0]],
            &[[3.0, 0.0], [0.0, 3.0], [0.0, -3.0]],
        );
        let o = observe(&w, &task, 0);
        assert_eq!(&o[10..14], &[0.5, 0.0, -0.5, 0.0]);
    }

    #[test]
    fn missing_neighbours_are_zero_padded() {
        // prey_predator n=3 has one prey but two prey slots
        let task = TaskSpec::new(TaskKind::PreyPredator, 3).unwrap();
        let w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(3));
        let o = observe(&w, &task, 0);
        assert_eq!(o.len(), 16);
        assert!(o[12..16].iter().all(|&v| v == 0.0));
        assert!(o[8..12].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn covered_landmarks_give_zero_distance_term() {
        let (task, w) = coop_nav_world(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        );
        let r = global_reward(&w, &task);
        assert_eq!(r, vec![0.0; 3]);
    }

    #[test]
    fn collisions_are_penalised() {
        let (task, w) = coop_nav_world(
            &[[0.0, 0.0], [0.1, 0.0], [0.0, 1.0]],
            &[[0.0, 0.0], [0.1, 0.0], [0.0, 1.0]],
        );
        assert_eq!(shared_reward(&w, &task), -1.0);
    }

    #[test]
    fn reward_vector_is_constant() {
        for kind in TaskKind::ALL {
            let task = TaskSpec::new(kind, 6).unwrap();
            let w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(11));
            let r = global_reward(&w, &task);
            assert_eq!(r.len(), 6);
            assert!(r.iter().all(|&v| v == r[0]), "{kind}");
        }
    }

    #[test]
    fn push_ball_on_landmark() {
        let task = TaskSpec::new(TaskKind::CoopPush, 3).unwrap();
        let mut w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(0));
        let ball = task.ball_index().unwrap();
        let target = task.landmark_range().start;
        let p = w.pos.row(target).to_owned();
        w.pos.row_mut(ball).assign(&p);
        // put one agent on the ball too, so both terms vanish
        w.pos.row_mut(0).assign(&p);
        assert_eq!(shared_reward(&w, &task), 0.0);
    }

    #[test]
    fn capture_bonus() {
        let task = TaskSpec::new(TaskKind::PreyPredator, 3).unwrap();
        let mut w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(0));
        for i in 0..3 {
            w.pos.row_mut(i).assign(&array![5.0 * i as f64 + 10.0, 0.0]);
        }
        let prey = task.prey_range().start;
        w.pos.row_mut(prey).assign(&array![10.05, 0.0]);
        assert_eq!(shared_reward(&w, &task), 10.0);
    }

    #[test]
    fn prey_flees_east_from_western_predator() {
        let task = TaskSpec::new(TaskKind::PreyPredator, 3).unwrap();
        let mut w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(0));
        let prey = task.prey_range().start;
        w.pos.row_mut(prey).assign(&array![0.0, 0.0]);
        w.pos.row_mut(0).assign(&array![-0.5, 0.0]);
        w.pos.row_mut(1).assign(&array![5.0, 5.0]);
        w.pos.row_mut(2).assign(&array![-5.0, 5.0]);
        let a = prey_action(&w, &task, 0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(a, [0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn prey_tie_goes_to_lower_predator() {
        let task = TaskSpec::new(TaskKind::PreyPredator, 3).unwrap();
        let mut w = spawn(&task, &mut ChaCha8Rng::seed_from_u64(0));
        let prey = task.prey_range().start;
        w.pos.row_mut(prey).assign(&array![0.0, 0.0]);
        w.pos.row_mut(0).assign(&array![0.0, 0.5]); // north
        w.pos.row_mut(1).assign(&array![0.5, 0.0]); // east, same distance
        w.pos.row_mut(2).assign(&array![9.0, 9.0]);
        let a = prey_action(&w, &task, 0, &mut ChaCha8Rng::seed_from_u64(0));
        // flee south from predator 0
        assert_eq!(a, [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn prey_without_predators_idles() {
        let mut task = TaskSpec::new(TaskKind::PreyPredator, 3).unwrap();
        task.n_agents = 0;
        // with no learned agents the single prey sits at index 0
        let w = World::new(vec![task.prey_body], 1, array![[0.0, 0.0]]).unwrap();
        let a = prey_action(&w, &task, 0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(a, [1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn env_step_returns_shared_rewards() {
        let task = TaskSpec::new(TaskKind::PreyPredator, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut env = Env::reset(&task, &mut rng);
        let obs = env.observations();
        assert_eq!(obs.shape(), &[6, 28]);
        let r = env.step(&Matrix::zeros((6, 5)), &mut rng).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(env.world.steps, 1);
        assert!(env.step(&Matrix::zeros((5, 5)), &mut rng).is_err());
    }
}
