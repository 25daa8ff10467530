use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::CovarianceKernel;

pub const DEFAULT_TERMS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayLaw {
    /// `λ_n = lambda0 · n^{-beta}`.
    Power { lambda0: f64, beta: f64 },
    /// A finite list; nothing is known beyond the truncation.
    Explicit,
}

/// Eigenvalues `λ_1 … λ_N` of the covariance operator `Q` of `G` in the
/// basis `e_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    lambdas: Vec<f64>,
    law: DecayLaw,
}

impl NoiseSpec {
    /// Power law truncated at `n_terms`. `Σ √λ_n < ∞` requires `beta > 2`.
    pub fn power_law(lambda0: f64, beta: f64, n_terms: usize) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::Domain(format!("lambda0 must be > 0, got {lambda0}")));
        }
        if !(beta > 2.0) {
            return Err(Error::Domain(format!(
                "decay exponent must exceed 2 for Σ√λ_n < ∞, got {beta}"
            )));
        }
        if n_terms == 0 {
            return Err(Error::Domain("at least one noise term is required".into()));
        }
        let lambdas = (1..=n_terms)
            .map(|n| lambda0 * (n as f64).powf(-beta))
            .collect();
        Ok(Self {
            lambdas,
            law: DecayLaw::Power { lambda0, beta },
        })
    }

    pub fn explicit(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Domain("at least one noise term is required".into()));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Domain(format!("eigenvalues must be > 0, got {bad}")));
        }
        Ok(Self {
            lambdas,
            law: DecayLaw::Explicit,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn law(&self) -> DecayLaw {
        self.law
    }

    pub fn n_terms(&self) -> usize {
        self.lambdas.len()
    }

    pub fn sqrt_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.sqrt()).collect()
    }

    /// `Tr Q` of the truncated operator.
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `Q = diag(λ_n)` in the basis `e_n`.
    pub fn covariance_operator(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.lambdas.clone()))
    }

    /// `Σ_{n>N} λ_n` for power laws (explicit sum plus an Euler–Maclaurin tail).
    pub fn tail_trace(&self) -> Option<f64> {
        match self.law {
            DecayLaw::Power { lambda0, beta } => {
                let start = self.n_terms() + 1;
                const EXPLICIT: usize = 10_000;
                let mut s: f64 = (start..start + EXPLICIT)
                    .map(|n| (n as f64).powf(-beta))
                    .sum();
                let m = (start + EXPLICIT) as f64;
                s += m.powf(1.0 - beta) / (beta - 1.0)
                    + 0.5 * m.powf(-beta)
                    + beta * m.powf(-beta - 1.0) / 12.0;
                Some(lambda0 * s)
            }
            DecayLaw::Explicit => None,
        }
    }

    /// Truncation error of `E‖G(t)‖²_U`: `Σ_{n>N} λ_n · R(t,t)`.
    pub fn truncation_error(&self, k: &CovarianceKernel, t: f64) -> Result<Option<f64>> {
        let r = k.covariance_r(t, t)?;
        Ok(self.tail_trace().map(|tail| tail * r))
    }
}

/// Config record for [`NoiseSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseConfig {
    Power {
        #[serde(default = "one")]
        lambda0: f64,
        beta: f64,
        #[serde(default = "default_terms")]
        n_terms: usize,
    },
    Explicit {
        lambdas: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_terms() -> usize {
    DEFAULT_TERMS
}

impl NoiseConfig {
    pub fn build(&self) -> Result<NoiseSpec> {
        match self {
            NoiseConfig::Power {
                lambda0,
                beta,
                n_terms,
            } => NoiseSpec::power_law(*lambda0, *beta, *n_terms),
            NoiseConfig::Explicit { lambdas } => NoiseSpec::explicit(lambdas.clone()),
        }
    }
}
