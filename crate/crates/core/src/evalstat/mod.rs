//! Evaluation protocol: noise-free rollouts of saved policies, final and
//! absolute metrics, significance tests, and curve export.

mod export;
mod metrics;
mod report;
mod rollout;
mod stats;

pub use export::{
    export, moving_average, read_evals, read_metrics, write_evals, write_metrics, MetricRow, METRICS_HEADER,
    SMOOTH_WINDOW,
};
pub(crate) use export::MetricsWriter;
pub use metrics::{absolute_metric, final_metric, CheckpointReturns, EvalLog, FINAL_WINDOW};
pub use report::{fmt_stat, format_table, StatReport, N_BOOT};
pub use rollout::{episode_rng, evaluate, rollout, ActorPolicy, Policy, RandomPolicy};
pub use stats::{bootstrap_ci, quantile_sorted, t_two_sided_p, ttest_2samp, ttest_2samp_with, BootstrapCi, TTest, TTestKind};
