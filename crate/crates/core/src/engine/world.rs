use ndarray::{s, ArrayView2};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Integration and contact constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physics {
    pub dt: f64,
    pub damping: f64,
    pub contact_force: f64,
    pub contact_margin: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            dt: 0.1,
            damping: 0.25,
            contact_force: 100.0,
            contact_margin: 0.001,
        }
    }
}

/// Static attributes of one particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Body {
    pub radius: f64,
    pub mass: f64,
    /// `f64::INFINITY` means unlimited.
    pub max_speed: f64,
    pub sensitivity: f64,
    pub movable: bool,
    pub collide: bool,
}

impl Body {
    pub fn agent(radius: f64) -> Self {
        Body {
            radius,
            mass: 1.0,
            max_speed: f64::INFINITY,
            sensitivity: 1.0,
            movable: true,
            collide: true,
        }
    }

    /// Immovable, non-colliding marker.
    pub fn landmark(radius: f64) -> Self {
        Body {
            radius,
            mass: 1.0,
            max_speed: 0.0,
            sensitivity: 0.0,
            movable: false,
            collide: false,
        }
    }
}

/// State of every particle in the plane.
///
/// The first `n_agents` entities are actuated: they take one row of a
/// [`JointAction`]. Everything after them (balls, landmarks) is passive.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub pos: Matrix,
    pub vel: Matrix,
    pub bodies: Vec<Body>,
    pub n_agents: usize,
    pub steps: u64,
    pub physics: Physics,
    pub(crate) clamp_logged: bool,
}

impl World {
    pub fn new(bodies: Vec<Body>, n_agents: usize, pos: Matrix) -> Result<Self> {
        let e = bodies.len();
        if n_agents == 0 || n_agents > e {
            return Err(Error::Invalid(format!(
                "world needs 1..={e} agents, got {n_agents}"
            )));
        }
        if pos.shape() != [e, 2] {
            return Err(Error::dim("world positions", pos.shape(), &[e, 2]));
        }
        if pos.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial positions".into()));
        }
        Ok(World {
            vel: Matrix::zeros((e, 2)),
            pos,
            bodies,
            n_agents,
            steps: 0,
            physics: Physics::default(),
            clamp_logged: false,
        })
    }

    pub fn n_entities(&self) -> usize {
        self.bodies.len()
    }

    pub fn agent_positions(&self) -> ArrayView2<'_, f64> {
        self.pos.slice(s![..self.n_agents, ..])
    }

    pub fn agent_velocities(&self) -> ArrayView2<'_, f64> {
        self.vel.slice(s![..self.n_agents, ..])
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let dx = self.pos[[a, 0]] - self.pos[[b, 0]];
        let dy = self.pos[[a, 1]] - self.pos[[b, 1]];
        (dx * dx + dy * dy).sqrt()
    }

    /// Whether two entities' discs overlap.
    pub fn touching(&self, a: usize, b: usize) -> bool {
        self.distance(a, b) < self.bodies[a].radius + self.bodies[b].radius
    }

    /// Reorders the first `n_agents` entities: new agent `k` is old agent `perm[k]`.
    pub fn permute_agents(&self, perm: &[usize]) -> World {
        assert_eq!(perm.len(), self.n_agents);
        let mut w = self.clone();
        for (k, &src) in perm.iter().enumerate() {
            w.pos.row_mut(k).assign(&self.pos.row(src));
            w.vel.row_mut(k).assign(&self.vel.row(src));
            w.bodies[k] = self.bodies[src];
        }
        w
    }
}

/// One row per actuated agent: `[no-op, left, right, forward, backward]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction(Matrix);

pub const ACTION_DIM: usize = 5;

impl JointAction {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.ncols() != ACTION_DIM {
            return Err(Error::dim("joint action", m.shape(), &[m.nrows(), ACTION_DIM]));
        }
        Ok(JointAction(m))
    }

    pub fn zeros(n: usize) -> Self {
        JointAction(Matrix::zeros((n, ACTION_DIM)))
    }

    pub fn n_agents(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }

    pub fn permute(&self, perm: &[usize]) -> JointAction {
        let mut m = self.0.clone();
        for (k, &src) in perm.iter().enumerate() {
            m.row_mut(k).assign(&self.0.row(src));
        }
        JointAction(m)
    }
}
