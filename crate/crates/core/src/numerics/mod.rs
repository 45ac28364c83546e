//! Dense layers, Adam, and a finite-difference gradient oracle.
//!
//! Storage and matrix products come from `ndarray`; everything that carries
//! gradients (layer backward maps, optimiser, checker) is implemented here.

mod adam;
mod gradcheck;
mod layers;
mod params;

pub use adam::{adam_step, clip_grad_norm, AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use layers::{
    activation, affine, uniform_init, Activation, ActivationBackward, AffineBackward, AffineGrads,
    BackwardMode, Dense, DenseCache, Mlp, MlpCache,
};
pub use params::{Matrix, Param, ParamId, ParamSet};
