use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci, ttest_2samp_with, BootstrapCi, TTest, TTestKind};
use crate::error::Result;

/// Significance summary of `candidate − baseline` for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub metric: String,
    pub ttest: TTest,
    pub ci: BootstrapCi,
    pub n_candidate: usize,
    pub n_baseline: usize,
}

/// Bootstrap resamples used by `compare`.
pub const N_BOOT: usize = 10_000;

impl StatReport {
    pub fn compute<R: Rng + ?Sized>(
        metric: &str,
        candidate: &[f64],
        baseline: &[f64],
        kind: TTestKind,
        n_boot: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(StatReport {
            metric: metric.to_string(),
            ttest: ttest_2samp_with(candidate, baseline, kind)?,
            ci: bootstrap_ci(candidate, baseline, n_boot, 0.95, rng)?,
            n_candidate: candidate.len(),
            n_baseline: baseline.len(),
        })
    }

    /// `t-stat. (p-value)` cell, e.g. `1.42 (1.9e-1)`.
    pub fn ttest_cell(&self) -> String {
        format!("{} ({:.1e})", fmt_stat(self.ttest.t), self.ttest.p)
    }

    /// `mean (C.I.)` cell, e.g. `5.81 (-1.47, 13.09)`.
    pub fn ci_cell(&self) -> String {
        format!(
            "{} ({}, {})",
            fmt_stat(self.ci.diff),
            fmt_stat(self.ci.lo),
            fmt_stat(self.ci.hi)
        )
    }
}

/// Two decimals for small magnitudes, fewer as the magnitude grows.
pub fn fmt_stat(x: f64) -> String {
    match x.abs() {
        a if !a.is_finite() => format!("{x}"),
        a if a >= 1000.0 => format!("{x:.0}"),
        a if a >= 100.0 => format!("{x:.1}"),
        _ => format!("{x:.2}"),
    }
}

/// Plain-text table with one row per report.
pub fn format_table(reports: &[StatReport]) -> String {
    let cells: Vec<(String, String, String)> = reports
        .iter()
        .map(|r| (r.metric.clone(), r.ttest_cell(), r.ci_cell()))
        .collect();
    let w0 = cells.iter().map(|c| c.0.len()).max().unwrap_or(0).max(6);
    let w1 = cells.iter().map(|c| c.1.len()).max().unwrap_or(0).max(17);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w0$}  {:<w1$}  mean (C.I.)", "", "t-stat. (p-value)");
    for (m, t, c) in cells {
        let _ = writeln!(out, "{m:<w0$}  {t:<w1$}  {c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_match_table_shape() {
        let r = StatReport {
            metric: "abs.".into(),
            ttest: TTest {
                t: 1.42,
                p: 0.19,
                df: 8.0,
            },
            ci: BootstrapCi {
                diff: 5.81,
                lo: -1.47,
                hi: 13.09,
            },
            n_candidate: 5,
            n_baseline: 5,
        };
        assert_eq!(r.ttest_cell(), "1.42 (1.9e-1)");
        assert_eq!(r.ci_cell(), "5.81 (-1.47, 13.09)");
        assert_eq!(fmt_stat(4244.4), "4244");
        assert_eq!(fmt_stat(634.44), "634.4");
    }
}
