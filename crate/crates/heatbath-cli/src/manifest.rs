//! Run manifest: the JSON record written next to every artifact set.
//!
//! A manifest pins everything needed to reproduce or audit a run — the
//! resolved config, the seed, the build version, and one pass/fail entry
//! per check — and round-trips through serde without loss, so downstream
//! tooling can parse, annotate, and re-emit it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// One audited quantity. `pass` means `|value| <= threshold` held (and the
/// value was finite) at the time the check ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn bounded(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        let pass = value.is_finite() && value.abs() <= threshold;
        Check { name: name.into(), value, threshold, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    /// File names (relative to the manifest) this run wrote.
    pub artifacts: Vec<String>,
    pub all_pass: bool,
}

impl Manifest {
    pub fn new(
        version: &str,
        seed: u64,
        config: ExperimentConfig,
        checks: Vec<Check>,
        artifacts: Vec<String>,
    ) -> Manifest {
        let all_pass = checks.iter().all(|c| c.pass);
        Manifest {
            experiment: config.experiment.clone(),
            version: version.into(),
            seed,
            config,
            checks,
            artifacts,
            all_pass,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
