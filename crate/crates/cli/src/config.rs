//! Flat JSON configuration for the experiment subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wbary_core::measures::BoxDomain;
use wbary_core::{Penalty, SolverConfig};

use crate::error::{CliError, CliResult};

/// One flat config drives all four experiments; each subcommand reads the
/// keys it needs and ignores the rest. Unknown keys are rejected so typos
/// surface as schema errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Cells of the 1-D solution grid.
    pub grid: usize,
    /// One of quadratic | entropy | sobolev.
    pub penalty: String,
    /// Density floor for entropy/sobolev.
    pub alpha: f64,
    /// Sobolev order.
    pub k: usize,
    pub gamma: f64,
    /// Descending list for rate-bias.
    pub gamma_list: Vec<f64>,
    /// Collection size for stability and decompose.
    pub n: usize,
    /// Sample sizes for rate-variance.
    pub n_list: Vec<usize>,
    /// Within-measure sample sizes for decompose.
    pub p_list: Vec<usize>,
    pub replicates: usize,
    /// Instances per perturbation scale (stability).
    pub instances: usize,
    /// Perturbation scales (stability).
    pub scales: Vec<f64>,
    /// Reference sample size for rate-bias.
    pub sample_size: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            grid: 128,
            penalty: "entropy".into(),
            alpha: 1e-6,
            k: 1,
            gamma: 0.1,
            gamma_list: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            n: 8,
            n_list: vec![4, 8, 16, 32, 64],
            p_list: vec![25, 100, 400],
            replicates: 50,
            instances: 34,
            scales: vec![1e-3, 1e-2, 1e-1],
            sample_size: 400,
            max_iters: 2000,
            tol: 1e-7,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage_at(format!("cannot read config: {e}"), path.display().to_string())
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::usage_at(format!("malformed config: {e}"), path.display().to_string())
        })
    }

    pub fn penalty(&self) -> CliResult<Penalty> {
        match self.penalty.as_str() {
            "quadratic" => Ok(Penalty::quadratic()),
            "entropy" => Ok(Penalty::entropy(self.alpha)?),
            "sobolev" => Ok(Penalty::sobolev(self.k, self.alpha)?),
            other => Err(CliError::usage(format!(
                "field penalty: unknown kind {other:?} (expected quadratic, entropy or sobolev)"
            ))),
        }
    }

    pub fn solver_config(&self, domain: &BoxDomain) -> SolverConfig {
        let mut cfg = SolverConfig::for_domain(domain);
        cfg.max_iters = self.max_iters;
        cfg.tol = self.tol;
        cfg
    }
}
