//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use idi_core::balance::Pooling;
use idi_core::idi::{Adjustment, IdiConfig};
use idi_core::sim::{McOptions, Method, ScenarioParams};
use idi_core::truncation::TerminalMass;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub adjustment: Adjustment,
    #[serde(default = "default_b", alias = "B")]
    pub bootstrap_b: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub caliper: Option<f64>,
    #[serde(default)]
    pub zeta_cap: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub smd_pooling: Pooling,
    #[serde(default)]
    pub terminal_mass: TerminalMass,
    /// Largest acceptable |SMD| after adjustment.
    #[serde(default = "default_smd_threshold")]
    pub smd_threshold: f64,
    /// Largest acceptable distance of a Q–Q point from the diagonal.
    #[serde(default = "default_qq_band")]
    pub qq_band: f64,
    #[serde(default)]
    pub scenario: Option<ScenarioParams>,
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Treatment effects for the power curve; empty skips it.
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: usize,
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            reps: default_reps(),
            methods: default_methods(),
            alpha_grid: Vec::new(),
            oracle_n: default_oracle_n(),
            max_failure_rate: default_failure_rate(),
        }
    }
}

fn default_b() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_smd_threshold() -> f64 {
    0.1
}
fn default_qq_band() -> f64 {
    0.25
}
fn default_reps() -> usize {
    100
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_oracle_n() -> usize {
    1_000_000
}
fn default_failure_rate() -> f64 {
    0.05
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::input(format!(
                "invalid configuration at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, msg: &str| Err(CliError::input(format!("invalid configuration at `{field}`: {msg}")));
        if self.bootstrap_b == 0 {
            return bad("bootstrap_b", "must be at least 1");
        }
        if self.caliper.is_some_and(|c| !(c > 0.0)) {
            return bad("caliper", "must be positive");
        }
        if self.zeta_cap.is_some_and(|c| !(c >= 1.0)) {
            return bad("zeta_cap", "must be at least 1");
        }
        if !(self.smd_threshold > 0.0) {
            return bad("smd_threshold", "must be positive");
        }
        if !(self.qq_band > 0.0) {
            return bad("qq_band", "must be positive");
        }
        if let Some(s) = &self.scenario {
            if let Err(e) = s.validate() {
                return bad("scenario", &e.to_string());
            }
        }
        if self.study.methods.is_empty() {
            return bad("study.methods", "must not be empty");
        }
        if self.study.oracle_n == 0 {
            return bad("study.oracle_n", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.study.max_failure_rate) {
            return bad("study.max_failure_rate", "must lie in [0, 1]");
        }
        if self.study.alpha_grid.iter().any(|a| !a.is_finite()) {
            return bad("study.alpha_grid", "values must be finite");
        }
        Ok(())
    }

    pub fn idi_config(&self) -> IdiConfig {
        IdiConfig {
            adjustment: self.adjustment,
            covariates: self.covariates.clone(),
            bootstrap_b: self.bootstrap_b,
            seed: self.seed,
            caliper: self.caliper,
            zeta_cap: self.zeta_cap,
            diagnostics: true,
            smd_pooling: self.smd_pooling,
            terminal_mass: self.terminal_mass,
            ..IdiConfig::default()
        }
    }

    pub fn mc_options(&self) -> McOptions {
        McOptions {
            bootstrap_b: self.bootstrap_b,
            oracle_n: self.study.oracle_n,
            max_failure_rate: self.study.max_failure_rate,
            caliper: self.caliper,
            truth: None,
        }
    }
}
