use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::TrainConfig;

/// Record of a finished training job. File paths are relative to the run
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub seed: u64,
    /// `(episode, file)` for every saved policy, in training order.
    pub checkpoints: Vec<(usize, PathBuf)>,
    pub metrics: PathBuf,
    pub evals: Option<PathBuf>,
    pub final_metric: Option<f64>,
    pub absolute_metric: Option<f64>,
    pub version: String,
    pub git: Option<String>,
    pub train_wallclock_s: f64,
    pub eval_wallclock_s: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Commit of the working tree the binary runs in, if any.
pub fn git_stamp() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Invalid(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let cfg = dir.join(CONFIG_FILE);
        let mut lines = String::new();
        for (k, v) in self.config.to_pairs() {
            lines.push_str(&format!("{k}={v}\n"));
        }
        fs::write(&cfg, lines).map_err(|e| Error::io(&cfg, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }
}
