use ndarray::Zip;

use super::params::{Matrix, ParamSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|p| Matrix::zeros(p.value.raw_dim())).collect();
        AdamState {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam step. Gradient slots are left as they are; the
/// caller zeroes them.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState, lr: f64) -> Result<()> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Invalid(format!("learning rate must be finite and >= 0, got {lr}")));
    }
    if state.m.len() != params.len() {
        return Err(Error::dim("adam state", &[state.m.len()], &[params.len()]));
    }
    if let Some(bad) = params.iter().find(|p| p.grad.iter().any(|g| !g.is_finite())) {
        return Err(Error::NonFinite(format!("gradient of {}", bad.name)));
    }

    state.t += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        Zip::from(&mut p.value)
            .and(&p.grad)
            .and(m)
            .and(v)
            .for_each(|theta, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            });
    }
    Ok(())
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(params: &mut ParamSet, max_norm: f64) -> f64 {
    let norm = params
        .iter()
        .flat_map(|p| p.grad.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.mapv_inplace(|g| g * scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scalar(value: f64, grad: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        let id = ps.add("theta", array![[value]]);
        ps.grad_mut(id)[[0, 0]] = grad;
        ps
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut ps = scalar(2.5, 0.0);
        let mut st = AdamState::new(&ps, AdamConfig::default());
        adam_step(&mut ps, &mut st, 0.01).unwrap();
        assert_eq!(ps.iter().next().unwrap().value[[0, 0]], 2.5);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut ps = scalar(0.0, 1.0);
        let mut st = AdamState::new(&ps, AdamConfig::default());
        adam_step(&mut ps, &mut st, 0.001).unwrap();
        let delta = ps.iter().next().unwrap().value[[0, 0]];
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        assert!((delta + 0.001 / (1.0 + 1e-8)).abs() < 1e-18);
        assert!((delta + 0.001).abs() < 1e-10);
    }

    #[test]
    fn zero_lr_is_noop() {
        let mut ps = scalar(1.0, 3.0);
        let mut st = AdamState::new(&ps, AdamConfig::default());
        adam_step(&mut ps, &mut st, 0.0).unwrap();
        assert_eq!(ps.iter().next().unwrap().value[[0, 0]], 1.0);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut ps = scalar(1.0, f64::INFINITY);
        let mut st = AdamState::new(&ps, AdamConfig::default());
        let err = adam_step(&mut ps, &mut st, 0.1).unwrap_err();
        assert!(err.to_string().contains("theta"));
        assert_eq!(st.steps(), 0);
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            let mut ps = scalar(0.3, -0.7);
            let mut st = AdamState::new(&ps, AdamConfig::default());
            for _ in 0..5 {
                adam_step(&mut ps, &mut st, 0.01).unwrap();
            }
            let bits = ps.iter().next().unwrap().value[[0, 0]].to_bits();
            bits
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", array![[0.0, 0.0]]);
        ps.grad_mut(id).assign(&array![[3.0, 4.0]]);
        let before = clip_grad_norm(&mut ps, 1.0);
        assert_eq!(before, 5.0);
        let g = ps.grad(id);
        assert!((g[[0, 0]] - 0.6).abs() < 1e-15 && (g[[0, 1]] - 0.8).abs() < 1e-15);
    }
}
