//! TOML run files.
//!
//! ```toml
//! [pivot]
//! k = 20
//! replicates = 500000
//! seed = 20190401
//!
//! [experiment]
//! kind = "eigenvalue"      # or "eigenfunction"
//! j = 1
//! delta = 0.1
//! sample_sizes = [200, 400, 600]
//! seed = 1
//!
//! [sweep]                  # optional: repeat the experiment per epsilon
//! epsilons = [0.0, 0.005, 0.01, 0.05]
//! bins = 20
//!
//! [analyze]                # options of the `analyze` command
//! order = 41
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyze::AnalysisConfig;
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::quantiles::{DEFAULT_REPLICATES, DEFAULT_SEED};

fn default_k() -> usize {
    20
}
fn default_pivot_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_pivot_seed() -> u64 {
    DEFAULT_SEED
}
fn default_bins() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PivotSettings {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_pivot_replicates")]
    pub replicates: usize,
    #[serde(default = "default_pivot_seed")]
    pub seed: u64,
}

impl Default for PivotSettings {
    fn default() -> Self {
        Self {
            k: default_k(),
            replicates: default_pivot_replicates(),
            seed: default_pivot_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub pivot: PivotSettings,
    pub experiment: Option<ExperimentConfig>,
    pub sweep: Option<SweepSettings>,
    pub analyze: Option<AnalysisConfig>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The experiment section, validated and consistent with `[pivot]`.
    pub fn experiment(&self) -> Result<&ExperimentConfig> {
        let exp = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::Config("missing [experiment] section".into()))?;
        exp.validate()?;
        if exp.k != self.pivot.k {
            return Err(Error::Config(format!(
                "experiment.k = {} differs from pivot.k = {}",
                exp.k, self.pivot.k
            )));
        }
        Ok(exp)
    }
}
