use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::metrics::mean;
use crate::error::{Error, Result};

/// Variance assumption of the two-sample t-test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    /// Equal variances, pooled estimate, `df = n_a + n_b − 2`.
    #[default]
    Pooled,
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    Welch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: f64,
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided survival probability `P(|T| ≥ |t|)` for Student's t.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Pooled-variance two-sample t-test of `mean(a) − mean(b)`.
pub fn ttest_2samp(a: &[f64], b: &[f64]) -> Result<TTest> {
    ttest_2samp_with(a, b, TTestKind::Pooled)
}

/// Two-sample t-test. If both samples are constant the statistic is 0 for
/// equal means (p = 1) and ±∞ otherwise (p = 0).
pub fn ttest_2samp_with(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(format!(
            "t-test needs at least two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_var(a, ma), sample_var(b, mb));
    let (se, df) = match kind {
        TTestKind::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    let diff = ma - mb;
    if se == 0.0 {
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        let p = if diff == 0.0 { 1.0 } else { 0.0 };
        // Welch df is 0/0 here; report the pooled value
        return Ok(TTest { t, p, df: na + nb - 2.0 });
    }
    let t = diff / se;
    Ok(TTest {
        t,
        p: t_two_sided_p(t, df),
        df,
    })
}

/// Linear-interpolation quantile of sorted data (`q ∈ [0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    /// Observed `mean(a) − mean(b)`.
    pub diff: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap interval for `mean(a) − mean(b)`: both samples are
/// resampled with replacement `n_boot` times.
pub fn bootstrap_ci<R: Rng + ?Sized>(a: &[f64], b: &[f64], n_boot: usize, level: f64, rng: &mut R) -> Result<BootstrapCi> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("bootstrap needs non-empty samples".into()));
    }
    if n_boot == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("bootstrap with n_boot={n_boot}, level={level}")));
    }
    let resample_mean = |xs: &[f64], rng: &mut R| {
        let n = xs.len();
        (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64
    };
    let mut diffs: Vec<f64> = (0..n_boot)
        .map(|_| resample_mean(a, rng) - resample_mean(b, rng))
        .collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let diff = mean(a) - mean(b);
    // Percentile bounds can miss the observed difference on tiny, skewed
    // samples; widen so the interval always contains it.
    Ok(BootstrapCi {
        diff,
        lo: quantile_sorted(&diffs, tail).min(diff),
        hi: quantile_sorted(&diffs, 1.0 - tail).max(diff),
    })
}
