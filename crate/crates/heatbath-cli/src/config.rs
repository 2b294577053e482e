//! Experiment description shared by config files, CLI flags, and manifests.
//!
//! TOML with nested tables (`[params]`, `[drift]`, `[potential]`, `[run]`,
//! `[tolerances]`) is the native format; a `.json` file with the same shape
//! is accepted anywhere a config path is expected. Every field is optional
//! except the experiment name — unset keys fall back to per-subcommand
//! defaults, and CLI flags override file values key for key. The resolved
//! config is echoed into the run manifest, so any run can be reproduced
//! from its manifest alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use heatbath::path::DriftField;
use heatbath::wave::PotentialKind;
use heatbath::{derive_params, HeatbathParams};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand this config describes; must match the one invoked.
    pub experiment: String,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub run: RunConfig,
    /// Per-check tolerance overrides; the README lists each subcommand's keys.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

/// Physical inputs; `m` is derived as `gamma²·mass_main` so the mass ratio
/// is always the primitive quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_main: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// Drift selection for path commands: `zero`, `constant` (with `value`),
/// or `ou` (with `rate`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig { kind: "ou".into(), rate: None, value: None }
    }
}

impl DriftConfig {
    pub fn build(&self, n: usize) -> Result<DriftField, CliError> {
        match self.kind.as_str() {
            "zero" => Ok(DriftField::zero(n)),
            "constant" => {
                let v = self.value.clone().unwrap_or_else(|| vec![0.5; n]);
                if v.len() != n {
                    return Err(CliError::Config(format!(
                        "drift.value: expected {n} components, got {}",
                        v.len()
                    )));
                }
                Ok(DriftField::constant(DVector::from_vec(v)))
            }
            "ou" => Ok(DriftField::ou(self.rate.unwrap_or(1.0))),
            other => Err(CliError::Config(format!(
                "drift.kind: unknown kind '{other}' (expected zero, constant, or ou)"
            ))),
        }
    }
}

/// Potential selection for wave commands: `zero`, `linear` (with `slope`),
/// or `harmonic` (with `k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { kind: "harmonic".into(), k: None, slope: None }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialKind, CliError> {
        match self.kind.as_str() {
            "zero" => Ok(PotentialKind::Zero),
            "linear" => Ok(PotentialKind::Linear { slope: self.slope.unwrap_or(1.0) }),
            "harmonic" => Ok(PotentialKind::Harmonic { k: self.k.unwrap_or(1.0) }),
            other => Err(CliError::Config(format!(
                "potential.kind: unknown kind '{other}' (expected zero, linear, or harmonic)"
            ))),
        }
    }
}

/// Run-shape knobs: seed, ensemble sizes, horizons, grids, and the handful
/// of experiment-specific scalars. Which keys a subcommand reads is listed
/// in its `--help`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhos: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Empty config for a subcommand, to be filled from flags and defaults.
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig {
            experiment: experiment.into(),
            params: ParamsConfig::default(),
            drift: DriftConfig::default(),
            potential: PotentialConfig::default(),
            run: RunConfig::default(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Reads a `.toml` or `.json` config; parse errors carry the offending
    /// key and position as reported by the deserializer.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            _ => Err(CliError::Config(format!(
                "{}: unsupported config extension (expected .toml or .json)",
                path.display()
            ))),
        }
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Io(format!("serializing config: {e}")))
    }

    pub fn to_json_string(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing config: {e}")))
    }

    /// Full parameter set with per-subcommand defaults for the keys the
    /// caller cares about. Validation failures name the config field.
    pub fn heatbath_params(
        &self,
        tau_bar_default: f64,
        n_default: usize,
    ) -> Result<HeatbathParams, CliError> {
        let mass_main = self.params.mass_main.unwrap_or(1.0);
        let gamma = self.params.gamma.unwrap_or(0.5);
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(CliError::Config(format!(
                "params.gamma: must be positive and finite, got {gamma}"
            )));
        }
        let sigma = self.params.sigma.unwrap_or(1.0);
        let tau_bar = self.params.tau_bar.unwrap_or(tau_bar_default);
        let n = self.params.n.unwrap_or(n_default);
        derive_params(mass_main, gamma * gamma * mass_main, sigma, tau_bar, n)
            .map_err(|e| CliError::Config(format!("params: {e}")))
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(42)
    }
}
