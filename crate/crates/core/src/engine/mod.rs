//! Two-dimensional particle physics: action forces, softened contacts, and
//! damped integration.

mod dynamics;
mod world;

pub use dynamics::{
    action_to_force, collision_forces, integrate, integrate_in_place, reference_collision_oracle, step,
    step_in_place, step_with, StepPath, COINCIDENT_FLOOR,
};
pub use world::{Body, JointAction, Physics, World, ACTION_DIM};
