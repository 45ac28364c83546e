use super::params::ParamSet;

/// Compares the analytic gradients stored in `params`' gradient slots with
/// central finite differences of `f`.
///
/// Returns `max |a - n| / max(1, |a|, |n|)` over every scalar coordinate.
pub fn grad_check<F>(mut f: F, params: &ParamSet, eps: f64) -> f64
where
    F: FnMut(&ParamSet) -> f64,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
    for name in &names {
        let id = probe.id(name).expect("cloned set has the same names");
        let n = params.value(id).len();
        for k in 0..n {
            let analytic = params.grad(id).as_slice().expect("standard layout")[k];
            let base = params.value(id).as_slice().expect("standard layout")[k];

            probe.value_mut(id).as_slice_mut().unwrap()[k] = base + eps;
            let up = f(&probe);
            probe.value_mut(id).as_slice_mut().unwrap()[k] = base - eps;
            let down = f(&probe);
            probe.value_mut(id).as_slice_mut().unwrap()[k] = base;

            let numeric = (up - down) / (2.0 * eps);
            let denom = 1f64.max(analytic.abs()).max(numeric.abs());
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn theta(value: f64, grad: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        let id = ps.add("theta", array![[value]]);
        ps.grad_mut(id)[[0, 0]] = grad;
        ps
    }

    fn square(ps: &ParamSet) -> f64 {
        ps.iter().next().unwrap().value[[0, 0]].powi(2)
    }

    #[test]
    fn quadratic_is_exact() {
        assert!(grad_check(square, &theta(3.0, 6.0), 1e-5) <= 1e-7);
    }

    #[test]
    fn constant_function() {
        assert_eq!(grad_check(|_| 4.0, &theta(1.0, 0.0), 1e-5), 0.0);
    }

    #[test]
    fn doubled_gradient_is_caught() {
        let err = grad_check(square, &theta(3.0, 12.0), 1e-5);
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }
}
