use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::diffusion::{DiffusionOperator, MultiplicationProfile};
use super::drift::{make_linear_heat, make_p_laplace, make_porous_medium, DeclaredConstants, DriftOperator};
use super::space::{GalerkinSpace, TripleKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    PLaplace {
        p: f64,
    },
    PorousMedium {
        m: f64,
    },
    LinearHeat,
    Zero {
        #[serde(default)]
        space: Option<TripleKind>,
    },
    /// Diagonal linear drift `A(u)_k = d_k u_k` with user-declared constants.
    Custom {
        diagonal: Vec<f64>,
        constants: DeclaredConstants,
        #[serde(default)]
        space: Option<TripleKind>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionConfig {
    #[default]
    Zero,
    /// Full matrix, one inner list per Galerkin mode.
    Constant { rows: Vec<Vec<f64>> },
    /// `B z = scale · z_column · e_mode` (0-based indices).
    Rank1 { mode: usize, column: usize, scale: f64 },
    Multiplication {
        lipschitz: f64,
        #[serde(default = "default_profile")]
        profile: MultiplicationProfile,
        #[serde(default)]
        column: usize,
    },
}

fn default_profile() -> MultiplicationProfile {
    MultiplicationProfile::Linear
}

/// Galerkin dimension plus drift and diffusion records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub n: usize,
    pub drift: DriftConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    /// Number of Wiener coordinates; defaults to `n`.
    #[serde(default)]
    pub wiener_dim: Option<usize>,
}

pub struct OperatorPair {
    pub space: Arc<GalerkinSpace>,
    pub drift: DriftOperator,
    pub diffusion: DiffusionOperator,
}

fn space_for(n: usize, kind: TripleKind) -> Result<GalerkinSpace> {
    match kind {
        TripleKind::Sobolev { p } => GalerkinSpace::sobolev(n, p),
        TripleKind::Lebesgue { q } => GalerkinSpace::porous(n, q - 1.0),
        TripleKind::Spectral => GalerkinSpace::spectral(n),
    }
}

impl OperatorConfig {
    pub fn wiener_dim(&self) -> usize {
        self.wiener_dim.unwrap_or(self.n)
    }

    pub fn build(&self) -> Result<OperatorPair> {
        let n = self.n;
        let (space, drift) = match &self.drift {
            DriftConfig::PLaplace { p } => {
                if !(*p >= 2.0) {
                    return Err(Error::Domain(format!("p-Laplace needs p ≥ 2, got {p}")));
                }
                let s = Arc::new(GalerkinSpace::sobolev(n, *p)?);
                (s.clone(), make_p_laplace(s, *p)?)
            }
            DriftConfig::PorousMedium { m } => {
                let s = Arc::new(GalerkinSpace::porous(n, *m)?);
                (s.clone(), make_porous_medium(s, *m)?)
            }
            DriftConfig::LinearHeat => {
                let s = Arc::new(GalerkinSpace::spectral(n)?);
                (s.clone(), make_linear_heat(s)?)
            }
            DriftConfig::Zero { space } => {
                let s = Arc::new(space_for(n, space.unwrap_or(TripleKind::Spectral))?);
                (s.clone(), DriftOperator::zero(s))
            }
            DriftConfig::Custom {
                diagonal,
                constants,
                space,
            } => {
                let s = Arc::new(space_for(n, space.unwrap_or(TripleKind::Spectral))?);
                (s.clone(), DriftOperator::diagonal(s, diagonal.clone(), *constants)?)
            }
        };
        let du = self.wiener_dim();
        if du == 0 {
            return Err(Error::Config("wiener_dim must be at least 1".into()));
        }
        let omega = space.h_weights();
        let diffusion = match &self.diffusion {
            DiffusionConfig::Zero => DiffusionOperator::zero(omega, du),
            DiffusionConfig::Constant { rows } => {
                if rows.len() != n || rows.iter().any(|r| r.len() != du) {
                    return Err(Error::Config(format!(
                        "constant diffusion must be {n} rows of {du} entries"
                    )));
                }
                let m = DMatrix::from_fn(n, du, |i, j| rows[i][j]);
                DiffusionOperator::constant(omega, m)?
            }
            DiffusionConfig::Rank1 { mode, column, scale } => {
                if *mode >= n || *column >= du {
                    return Err(Error::Config(format!(
                        "rank-1 diffusion index ({mode}, {column}) outside {n}×{du}"
                    )));
                }
                let mut m = DMatrix::zeros(n, du);
                m[(*mode, *column)] = *scale;
                DiffusionOperator::constant(omega, m)?
            }
            DiffusionConfig::Multiplication {
                lipschitz,
                profile,
                column,
            } => DiffusionOperator::multiplication(omega, du, *lipschitz, *profile, *column)?,
        };
        Ok(OperatorPair {
            space,
            drift,
            diffusion,
        })
    }
}
