//! The JSON run configuration.
//!
//! One file holds the master seed, the reference grid, and one optional
//! section per subcommand. Normalizing a config fills every default and
//! drops the fields that cannot change outputs (`out`, `threads`); the
//! normalized text is what manifests record, and it parses back to itself.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use fdreg::experiments::{Eta, ProcessKind, PseudometricFamily, RegressionSpec, SweepEstimator};
use fdreg::{KernelName, VariantKind, DEFAULT_REFERENCE_INTERVALS};

fn default_grid_intervals() -> usize {
    DEFAULT_REFERENCE_INTERVALS
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_grid_intervals")]
    pub grid_intervals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub process: ProcessKind,
    pub regression: RegressionSpec,
    pub n: usize,
}

/// Pseudometric as written in configs. `h` and `kernel` apply to the
/// smooth variant only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudometricConfig {
    pub variant: VariantKind,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelName>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    /// Full L² metric. Without `h` each query uses its own hₙ*.
    Full {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
        #[serde(default)]
        kernel: KernelName,
    },
    /// k-NN radius bandwidth; `k` defaults to ⌈√n⌉.
    Knn {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default)]
        kernel: KernelName,
    },
    /// Kernel estimator on d_p with the coupled bandwidth plan.
    Discretized {
        pseudometric: PseudometricConfig,
        /// Basis CSV for the eigen variant; built from the training curves
        /// when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<PathBuf>,
        /// Fixed c_np instead of the schedule.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_np: Option<f64>,
        #[serde(default = "one")]
        cnp_scale: f64,
        #[serde(default = "one", rename = "C")]
        c: f64,
        #[serde(default)]
        kernel: KernelName,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub train_curves: PathBuf,
    pub train_responses: PathBuf,
    pub queries: PathBuf,
    pub estimator: EstimatorConfig,
}

fn default_queries() -> usize {
    fdreg::experiments::DEFAULT_QUERIES
}

fn default_gamma_exponent() -> f64 {
    0.4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub process: ProcessKind,
    pub regression: RegressionSpec,
    pub estimator: SweepEstimator,
    pub n_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_queries")]
    pub queries: usize,
    /// γₙ = n^gamma_exponent in the rate-transfer columns.
    #[serde(default = "default_gamma_exponent")]
    pub gamma_exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesicovitchConfig {
    pub n: usize,
    pub deltas: Vec<f64>,
}

fn default_mc() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H2Config {
    pub family: PseudometricFamily,
    #[serde(default = "one")]
    pub cnp_scale: f64,
    pub n_values: Vec<usize>,
    pub p_values: Vec<usize>,
    #[serde(default = "default_mc")]
    pub mc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamilyName {
    Indicator,
    KernelSmoother,
}

fn default_probes() -> usize {
    2001
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisCheckConfig {
    pub family: BasisFamilyName,
    pub p: usize,
    /// Smoother bandwidth, default 1/p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default)]
    pub kernel: KernelName,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub process: ProcessKind,
    pub regression: RegressionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besicovitch: Option<BesicovitchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<H2Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_check: Option<BasisCheckConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// The config with run-only fields removed.
    pub fn normalized(&self) -> Self {
        Self {
            out: None,
            threads: None,
            ..self.clone()
        }
    }

    /// Pretty JSON of [`RunConfig::normalized`], newline-terminated.
    pub fn normalized_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.normalized()).expect("config serializes");
        s.push('\n');
        s
    }
}

/// A small simulate config, handy for smoke runs.
pub fn example_simulate(seed: u64, n: usize, grid_intervals: usize) -> RunConfig {
    RunConfig {
        seed,
        grid_intervals,
        out: None,
        threads: None,
        simulate: Some(SimulateConfig {
            process: ProcessKind::SmoothFourier { modes: 20, decay: 1.0 },
            regression: RegressionSpec {
                eta: Eta::IntegralMean,
                noise_sd: 0.1,
            },
            n,
        }),
        fit: None,
        convergence: None,
        diagnose: None,
    }
}
