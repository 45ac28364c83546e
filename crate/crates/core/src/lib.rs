//! Multi-agent deep deterministic policy gradient with a permutation
//! invariant graph-convolutional critic, running on a vectorized 2-D
//! particle world.

pub mod cli;
pub mod critics;
pub mod engine;
pub mod error;
pub mod evalstat;
pub mod learner;
pub mod numerics;
pub mod scenarios;

pub use error::{Error, Result};
