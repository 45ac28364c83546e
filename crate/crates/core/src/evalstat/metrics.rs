use crate::error::{Error, Result};

/// Evaluation returns of one saved policy.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointReturns {
    /// Training episode after which the policy was saved.
    pub episode: usize,
    pub returns: Vec<f64>,
}

impl CheckpointReturns {
    pub fn mean(&self) -> f64 {
        mean(&self.returns)
    }
}

/// Evaluation returns of the saved policies, in training order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalLog {
    checkpoints: Vec<CheckpointReturns>,
}

/// Number of trailing checkpoints pooled by [`final_metric`].
pub const FINAL_WINDOW: usize = 10;

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl EvalLog {
    pub fn new() -> Self {
        EvalLog::default()
    }

    /// Appends a checkpoint; it must come after the previous one and hold at
    /// least one finite return.
    pub fn push(&mut self, episode: usize, returns: Vec<f64>) -> Result<()> {
        if returns.is_empty() {
            return Err(Error::Invalid(format!("checkpoint {episode} has no returns")));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite(format!("returns of checkpoint {episode}")));
        }
        if let Some(last) = self.checkpoints.last() {
            if episode <= last.episode {
                return Err(Error::Invalid(format!(
                    "checkpoint {episode} is not after checkpoint {}",
                    last.episode
                )));
            }
        }
        self.checkpoints.push(CheckpointReturns { episode, returns });
        Ok(())
    }

    pub fn checkpoints(&self) -> &[CheckpointReturns] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// Returns pooled over the last (up to) ten checkpoints.
    pub fn final_returns(&self) -> Vec<f64> {
        let start = self.checkpoints.len().saturating_sub(FINAL_WINDOW);
        self.checkpoints[start..]
            .iter()
            .flat_map(|c| c.returns.iter().copied())
            .collect()
    }

    /// Returns of the checkpoint with the highest mean (earliest on ties).
    pub fn best(&self) -> Option<&CheckpointReturns> {
        self.checkpoints
            .iter()
            .fold(None, |best: Option<&CheckpointReturns>, c| match best {
                Some(b) if b.mean() >= c.mean() => Some(b),
                _ => Some(c),
            })
    }
}

/// Mean of all returns of the last ten checkpoints.
pub fn final_metric(log: &EvalLog) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(mean(&log.final_returns()))
}

/// Highest per-checkpoint mean return.
pub fn absolute_metric(log: &EvalLog) -> Result<f64> {
    log.best().map(CheckpointReturns::mean).ok_or(Error::EmptyLog)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_of(means: &[f64]) -> EvalLog {
        let mut log = EvalLog::new();
        for (k, &m) in means.iter().enumerate() {
            log.push(k + 1, vec![m - 1.0, m, m + 1.0]).unwrap();
        }
        log
    }

    #[test]
    fn empty_log_errors() {
        assert!(matches!(final_metric(&EvalLog::new()), Err(Error::EmptyLog)));
        assert!(matches!(absolute_metric(&EvalLog::new()), Err(Error::EmptyLog)));
    }

    #[test]
    fn two_checkpoints_average() {
        assert_eq!(final_metric(&log_of(&[1.0, 3.0])).unwrap(), 2.0);
    }

    #[test]
    fn only_last_ten_count() {
        let means: Vec<f64> = (0..12).map(|k| if k < 2 { 1000.0 } else { k as f64 }).collect();
        assert_eq!(final_metric(&log_of(&means)).unwrap(), 6.5);
    }

    #[test]
    fn absolute_is_best_mean() {
        assert_eq!(absolute_metric(&log_of(&[-5.0, -3.0, -4.0])).unwrap(), -3.0);
    }

    #[test]
    fn order_must_increase() {
        let mut log = EvalLog::new();
        log.push(5, vec![1.0]).unwrap();
        assert!(log.push(5, vec![1.0]).is_err());
        assert!(log.push(6, vec![f64::NAN]).is_err());
    }
}
