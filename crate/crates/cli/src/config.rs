//! Experiment configuration: one TOML file with a mandatory `master_seed` and
//! one optional table per subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gspde::gaussian::{NoiseConfig, NoiseSpec, OperatorValuedIntegrand};
use gspde::kernel::{CovarianceKernel, KernelConfig};
use gspde::operators::OperatorConfig;
use gspde::rng::{derive_seed, Domain};
use gspde::solver::{InitialState, InnerInit, InnerMethod, SolverConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{at, CliError, Result};

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_z() -> f64 {
    3.0
}

fn default_fidelity_nodes() -> usize {
    8
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub kernel: KernelConfig,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Number of grid nodes, including `t = 0`.
    pub nodes: usize,
    pub n_paths: usize,
    /// Sample the `Q`-weighted vector process instead of the scalar one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default = "default_fidelity_nodes")]
    pub fidelity_nodes: usize,
    #[serde(default = "default_z")]
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Fidelity,
    Isometry,
    Identities,
    Integrability,
    Conditions,
}

fn all_suites() -> Vec<Suite> {
    vec![
        Suite::Fidelity,
        Suite::Isometry,
        Suite::Identities,
        Suite::Integrability,
        Suite::Conditions,
    ]
}

fn default_condition_samples() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "all_suites")]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub kernels: Vec<KernelConfig>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub nodes: usize,
    pub n_paths: usize,
    #[serde(default = "default_fidelity_nodes")]
    pub fidelity_nodes: usize,
    #[serde(default = "default_z")]
    pub z: f64,
    /// Noise law for the `dG` identities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub operators: Vec<OperatorConfig>,
    #[serde(default = "default_condition_samples")]
    pub condition_samples: usize,
    /// Test knob: added to every oracle value before comparison.
    #[serde(default)]
    pub inject_oracle_offset: f64,
}

/// Integrand `h` of the `dG` term, as a coefficient matrix `dim_h × N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum IntegrandConfig {
    #[default]
    Zero,
    /// `e_k ↦ e_k` for the listed modes.
    Projection { modes: Vec<usize> },
    /// Arbitrary constant matrix; `modes` declares its finite range.
    Constant {
        rows: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<Vec<usize>>,
    },
}


impl IntegrandConfig {
    pub fn build(&self, dim_h: usize, dim_u: usize) -> gspde::Result<OperatorValuedIntegrand> {
        match self {
            IntegrandConfig::Zero => Ok(OperatorValuedIntegrand::zero(dim_h, dim_u)),
            IntegrandConfig::Projection { modes } => OperatorValuedIntegrand::mode_projection(dim_h, dim_u, modes),
            IntegrandConfig::Constant { rows, modes } => {
                if rows.len() != dim_h {
                    return Err(gspde::Error::Config(format!(
                        "h has {} rows, the space has dimension {dim_h}",
                        rows.len()
                    )));
                }
                if let Some(r) = rows.iter().find(|r| r.len() != dim_u) {
                    return Err(gspde::Error::Config(format!(
                        "h rows need {dim_u} entries (one per noise term), found {}",
                        r.len()
                    )));
                }
                let m = DMatrix::from_fn(dim_h, dim_u, |i, j| rows[i][j]);
                let h = OperatorValuedIntegrand::constant(m)?;
                match modes {
                    Some(modes) => h.with_projection(modes.clone()),
                    None => Ok(h),
                }
            }
        }
    }
}

fn default_inner_tol() -> f64 {
    SolverConfig::new(1.0, 1.0, 0, 0).inner_tol
}

fn default_inner_max_iter() -> usize {
    SolverConfig::new(1.0, 1.0, 0, 0).inner_max_iter
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_max_iter")]
    pub inner_max_iter: usize,
    #[serde(default)]
    pub inner_method: InnerMethod,
    #[serde(default)]
    pub inner_init: InnerInit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kernel: KernelConfig,
    pub noise: NoiseConfig,
    pub operator: OperatorConfig,
    #[serde(default)]
    pub h: IntegrandConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    pub solver: SolverSection,
}

fn default_write_paths() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub n_runs: usize,
    /// Number of runs written out as full path CSVs.
    #[serde(default = "default_write_paths")]
    pub write_paths: usize,
    /// Also run the `[rates]` study and write its table.
    #[serde(default)]
    pub with_rates: bool,
    #[serde(default = "default_z")]
    pub z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub dt_list: Vec<f64>,
    pub n_runs: usize,
}

/// Seeds derived from `master_seed`, recorded in every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub gaussian: u64,
    pub wiener: u64,
    pub harness: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            gaussian: derive_seed(master, Domain::GaussianNoise),
            wiener: derive_seed(master, Domain::WienerNoise),
            harness: derive_seed(master, Domain::Harness),
        }
    }
}

/// The configuration as run: the parsed file after command-line overrides,
/// the derived seeds and the fully resolved kernel parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub resolved_kernels: BTreeMap<String, KernelConfig>,
}

impl Resolved {
    pub fn new(config: ExperimentConfig) -> Self {
        let seeds = Seeds::from_master(config.master_seed);
        Self {
            config,
            seeds,
            resolved_kernels: BTreeMap::new(),
        }
    }

    pub fn kernel(&mut self, label: &str, cfg: &KernelConfig, horizon: Option<f64>) -> Result<CovarianceKernel> {
        let mut k = cfg.build().map_err(at(label))?;
        if let Some(t) = horizon {
            if t != k.horizon() {
                k = k.with_horizon(t).map_err(at(label))?;
            }
        }
        if let Some(c) = k.config() {
            self.resolved_kernels.insert(label.to_string(), c.clone());
        }
        Ok(k)
    }

    /// TOML rendering with every line prefixed by `# `.
    pub fn header_lines(&self) -> Vec<String> {
        let text = toml::to_string(self).expect("resolved config serializes");
        text.lines().map(|l| l.to_string()).collect()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("resolved config serializes")
    }
}

pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl ProblemConfig {
    pub fn noise(&self) -> Result<NoiseSpec> {
        self.noise.build().map_err(at("problem.noise"))
    }

    pub fn solver(&self, seeds: &Seeds) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(s.dt, s.horizon, seeds.wiener, seeds.gaussian);
        cfg.inner_tol = s.inner_tol;
        cfg.inner_max_iter = s.inner_max_iter;
        cfg.inner_method = s.inner_method;
        cfg.inner_init = s.inner_init;
        Ok(cfg)
    }

    pub fn initial(&self) -> InitialState {
        self.initial
            .clone()
            .unwrap_or_else(|| InitialState::zero(self.operator.n))
    }
}

pub fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("missing [{name}] table")))
}
