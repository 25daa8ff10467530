use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, StreamFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// `v ← v − τ(v − dt·Ā(v) − b)` with backtracking on `τ`.
    FixedPoint,
    /// Newton with backtracking line search; falls back to the fixed point
    /// when the drift has no Jacobian.
    #[default]
    Newton,
}

/// Starting point of each implicit solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerInit {
    #[default]
    Previous,
    Zero,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Bound on the H-norm residual of each implicit solve.
    #[serde(default = "default_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_max_iter")]
    pub inner_max_iter: usize,
    #[serde(default)]
    pub inner_method: InnerMethod,
    #[serde(default)]
    pub inner_init: InnerInit,
    pub seed_w: u64,
    pub seed_g: u64,
}

impl SolverConfig {
    pub fn new(dt: f64, horizon: f64, seed_w: u64, seed_g: u64) -> Self {
        Self {
            dt,
            horizon,
            inner_tol: default_tol(),
            inner_max_iter: default_max_iter(),
            inner_method: InnerMethod::default(),
            inner_init: InnerInit::default(),
            seed_w,
            seed_g,
        }
    }

    /// Number of steps; `horizon / dt` must be an integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "dt = {} and horizon = {} must be positive",
                self.dt, self.horizon
            )));
        }
        let n = (self.horizon / self.dt).round();
        if n < 1.0 || (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::Config(format!(
                "dt = {} does not divide the horizon {}",
                self.dt, self.horizon
            )));
        }
        Ok(n as usize)
    }

    /// Checks tolerances and the contraction condition `dt·max(0, c) < 1`.
    pub fn validate(&self, c: f64) -> Result<usize> {
        let steps = self.steps()?;
        if !(self.inner_tol > 0.0) || self.inner_max_iter == 0 {
            return Err(Error::Config("inner_tol and inner_max_iter must be positive".into()));
        }
        if self.dt * c.max(0.0) >= 1.0 {
            return Err(Error::Contract(format!(
                "dt·c = {} ≥ 1: the implicit step is not contractive",
                self.dt * c
            )));
        }
        Ok(steps)
    }
}

/// Initial condition: a fixed vector, or per-run Gaussian coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Deterministic {
        coeffs: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        std: Vec<f64>,
        seed: u64,
    },
}

impl InitialState {
    pub fn deterministic(v: &DVector<f64>) -> Self {
        Self::Deterministic {
            coeffs: v.iter().copied().collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::Deterministic { coeffs: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Deterministic { coeffs } => coeffs.len(),
            Self::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = match self {
            Self::Deterministic { coeffs } => coeffs.len() == n && coeffs.iter().all(|x| x.is_finite()),
            Self::Gaussian { mean, std, .. } => {
                mean.len() == n && std.len() == n && std.iter().all(|s| *s >= 0.0 && s.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("initial state must have {n} finite coefficients")))
        }
    }

    pub fn draw(&self, run: usize) -> DVector<f64> {
        match self {
            Self::Deterministic { coeffs } => DVector::from_column_slice(coeffs),
            Self::Gaussian { mean, std, seed } => {
                let mut rng = StreamFamily::new(*seed, Domain::InitialState).stream(run as u64);
                DVector::from_iterator(
                    mean.len(),
                    mean.iter().zip(std).map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal)),
                )
            }
        }
    }
}
