use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::EvalLog;
use super::report::StatReport;
use crate::error::{Error, Result};

/// One line of a run's `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub episode: usize,
    /// Environment steps taken so far.
    pub steps: usize,
    pub mean_episode_reward: f64,
    /// Mean critic loss over this episode's updates; NaN without updates.
    pub critic_loss: f64,
    pub actor_obj: f64,
    pub wallclock_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EvalRow {
    checkpoint_episode: usize,
    eval_episode: usize,
    episode_return: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Invalid(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub const METRICS_HEADER: [&str; 6] = [
    "episode",
    "steps",
    "mean_episode_reward",
    "critic_loss",
    "actor_obj",
    "wallclock_s",
];

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    write_rows(path, rows, &METRICS_HEADER)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    read_rows(path)
}

/// Appends rows to an existing metrics file without rewriting it.
pub(crate) struct MetricsWriter {
    inner: csv::Writer<fs::File>,
    path: std::path::PathBuf,
}

impl MetricsWriter {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        inner.write_record(METRICS_HEADER).map_err(|e| csv_err(path, e))?;
        Ok(MetricsWriter {
            inner,
            path: path.to_path_buf(),
        })
    }

    pub(crate) fn write(&mut self, row: &MetricRow) -> Result<()> {
        self.inner.serialize(row).map_err(|e| csv_err(&self.path, e))
    }

    pub(crate) fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_evals(path: &Path, log: &EvalLog) -> Result<()> {
    let rows = log.checkpoints().iter().flat_map(|c| {
        c.returns.iter().enumerate().map(|(k, &r)| EvalRow {
            checkpoint_episode: c.episode,
            eval_episode: k,
            episode_return: r,
        })
    });
    write_rows(path, rows, &["checkpoint_episode", "eval_episode", "episode_return"])
}

pub fn read_evals(path: &Path) -> Result<EvalLog> {
    let rows: Vec<EvalRow> = read_rows(path)?;
    let mut log = EvalLog::new();
    let mut current: Option<(usize, Vec<f64>)> = None;
    for row in rows {
        match &mut current {
            Some((ep, returns)) if *ep == row.checkpoint_episode => returns.push(row.episode_return),
            _ => {
                if let Some((ep, returns)) = current.take() {
                    log.push(ep, returns)?;
                }
                current = Some((row.checkpoint_episode, vec![row.episode_return]));
            }
        }
    }
    if let Some((ep, returns)) = current {
        log.push(ep, returns)?;
    }
    Ok(log)
}

/// Trailing moving average in "valid" mode: one value per full window.
/// A window longer than the series yields the mean of the whole series.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let w = window.clamp(1, xs.len());
    let mut out = Vec::with_capacity(xs.len() + 1 - w);
    let mut sum: f64 = xs[..w].iter().sum();
    out.push(sum / w as f64);
    for k in w..xs.len() {
        sum += xs[k] - xs[k - w];
        out.push(sum / w as f64);
    }
    out
}

/// Smoothing window of the exported curves.
pub const SMOOTH_WINDOW: usize = 100;

fn write_dat(path: &Path, title: &str, x: &[usize], raw: &[f64]) -> Result<()> {
    let smooth = moving_average(raw, SMOOTH_WINDOW);
    let offset = raw.len() - smooth.len().min(raw.len());
    let mut text = format!("# {title}\n# episode raw smoothed\n");
    for (k, (&e, &r)) in x.iter().zip(raw).enumerate() {
        let s = if k >= offset { smooth[k - offset] } else { f64::NAN };
        text.push_str(&format!("{e} {r} {s}\n"));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes `rewards.csv`, `qloss.csv`, `stats.csv`, `evals.csv`, and one
/// gnuplot data file per curve into `dir`.
pub fn export(dir: &Path, metrics: &[MetricRow], log: &EvalLog, reports: &[StatReport]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ep: Vec<usize> = metrics.iter().map(|m| m.episode).collect();
    let rew: Vec<f64> = metrics.iter().map(|m| m.mean_episode_reward).collect();
    let loss: Vec<f64> = metrics.iter().map(|m| m.critic_loss).collect();
    write_rows(
        &dir.join("rewards.csv"),
        ep.iter().zip(&rew),
        &["episode", "mean_episode_reward"],
    )?;
    write_rows(&dir.join("qloss.csv"), ep.iter().zip(&loss), &["episode", "critic_loss"])?;
    // Episodes before the first update have no loss; the curve starts after them.
    let first = loss.iter().position(|l| !l.is_nan()).unwrap_or(loss.len());
    write_dat(&dir.join("rewards.dat"), "training reward", &ep, &rew)?;
    write_dat(&dir.join("qloss.dat"), "critic loss", &ep[first..], &loss[first..])?;
    let stats = reports.iter().map(|r| {
        (
            &r.metric,
            r.ttest.t,
            r.ttest.p,
            r.ttest.df,
            r.ci.diff,
            r.ci.lo,
            r.ci.hi,
            r.n_candidate,
            r.n_baseline,
        )
    });
    write_rows(
        &dir.join("stats.csv"),
        stats,
        &["metric", "t", "p", "df", "mean_diff", "ci_lo", "ci_hi", "n_candidate", "n_baseline"],
    )?;
    write_evals(&dir.join("evals.csv"), log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_valid_mode() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
        assert_eq!(moving_average(&[1.0, 2.0, 6.0], 100), vec![3.0]);
        assert!(moving_average(&[], 3).is_empty());
    }

    #[test]
    fn empty_export_has_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        export(dir.path(), &[], &EvalLog::new(), &[]).unwrap();
        let text = fs::read_to_string(dir.path().join("rewards.csv")).unwrap();
        assert_eq!(text, "episode,mean_episode_reward\n");
        let text = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn metrics_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            MetricRow {
                episode: 1,
                steps: 25,
                mean_episode_reward: -12.345678901234567,
                critic_loss: f64::NAN,
                actor_obj: f64::NAN,
                wallclock_s: 0.0,
            },
            MetricRow {
                episode: 2,
                steps: 50,
                mean_episode_reward: 1e-300,
                critic_loss: 0.1 + 0.2,
                actor_obj: -3.0,
                wallclock_s: 0.0,
            },
        ];
        let p = dir.path().join("m.csv");
        write_metrics(&p, &rows).unwrap();
        let back = read_metrics(&p).unwrap();
        assert_eq!(back[1], rows[1]);
        assert_eq!(back[0].mean_episode_reward, rows[0].mean_episode_reward);
        assert!(back[0].critic_loss.is_nan());
    }

    #[test]
    fn evals_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = EvalLog::new();
        log.push(10, vec![1.5, -2.25]).unwrap();
        log.push(20, vec![0.1 + 0.2]).unwrap();
        let p = dir.path().join("evals.csv");
        write_evals(&p, &log).unwrap();
        assert_eq!(read_evals(&p).unwrap(), log);
    }
}
