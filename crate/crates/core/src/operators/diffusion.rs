use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::shift::NoisePath;

pub type DiffusionFn = Arc<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicationProfile {
    /// `B(u) z = L z_j u`.
    Linear,
    /// `B(u) z = L z_j sin(u)`, sine taken coefficientwise.
    Sine,
}

#[derive(Clone)]
pub enum DiffusionKind {
    Zero,
    Constant(DMatrix<f64>),
    Multiplication {
        lipschitz: f64,
        profile: MultiplicationProfile,
        column: usize,
    },
    Custom(DiffusionFn),
    Shifted { base: Box<DiffusionOperator>, path: Arc<NoisePath> },
}

impl fmt::Debug for DiffusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionKind::Zero => write!(f, "Zero"),
            DiffusionKind::Constant(m) => write!(f, "Constant({}×{})", m.nrows(), m.ncols()),
            DiffusionKind::Multiplication {
                lipschitz,
                profile,
                column,
            } => write!(f, "Multiplication {{ lipschitz: {lipschitz}, profile: {profile:?}, column: {column} }}"),
            DiffusionKind::Custom(_) => write!(f, "Custom(..)"),
            DiffusionKind::Shifted { base, .. } => write!(f, "Shifted {{ base: {:?} }}", base.kind),
        }
    }
}

/// `B(t, v)` as a `dim_h × dim_u` matrix; columns are images of the
/// orthonormal basis of `U`.
///
/// `lipschitz_sq` and `offset_sq` bound `‖B(u)−B(v)‖²_HS ≤ L²‖u−v‖²_H` and
/// `‖B(t,0)‖²_HS`.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    kind: DiffusionKind,
    dim_h: usize,
    dim_u: usize,
    omega: Vec<f64>,
    lipschitz_sq: f64,
    offset_sq: f64,
}

impl DiffusionOperator {
    /// `omega` are the H-inner-product weights of the target space.
    pub fn zero(omega: &[f64], dim_u: usize) -> Self {
        Self {
            kind: DiffusionKind::Zero,
            dim_h: omega.len(),
            dim_u,
            omega: omega.to_vec(),
            lipschitz_sq: 0.0,
            offset_sq: 0.0,
        }
    }

    pub fn constant(omega: &[f64], matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != omega.len() {
            return Err(Error::dims("diffusion rows", omega.len(), matrix.nrows()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("diffusion matrix must be finite".into()));
        }
        let mut op = Self::zero(omega, matrix.ncols());
        op.offset_sq = op.hs_norm_sq(&matrix);
        op.kind = DiffusionKind::Constant(matrix);
        Ok(op)
    }

    pub fn multiplication(
        omega: &[f64],
        dim_u: usize,
        lipschitz: f64,
        profile: MultiplicationProfile,
        column: usize,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Domain(format!("Lipschitz constant {lipschitz} must be finite and ≥ 0")));
        }
        if column >= dim_u {
            return Err(Error::dims("multiplication column", dim_u, column + 1));
        }
        let mut op = Self::zero(omega, dim_u);
        op.kind = DiffusionKind::Multiplication {
            lipschitz,
            profile,
            column,
        };
        op.lipschitz_sq = lipschitz * lipschitz;
        Ok(op)
    }

    pub fn custom(omega: &[f64], dim_u: usize, f: DiffusionFn, lipschitz_sq: f64, offset_sq: f64) -> Self {
        let mut op = Self::zero(omega, dim_u);
        op.kind = DiffusionKind::Custom(f);
        op.lipschitz_sq = lipschitz_sq;
        op.offset_sq = offset_sq;
        op
    }

    pub(crate) fn shifted(&self, path: Arc<NoisePath>) -> Self {
        let mut op = self.clone();
        op.kind = DiffusionKind::Shifted {
            base: Box::new(self.clone()),
            path,
        };
        op
    }

    pub fn kind(&self) -> &DiffusionKind {
        &self.kind
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn lipschitz_sq(&self) -> f64 {
        self.lipschitz_sq
    }

    pub fn offset_sq(&self) -> f64 {
        self.offset_sq
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            DiffusionKind::Zero => true,
            DiffusionKind::Shifted { base, .. } => base.is_zero(),
            _ => false,
        }
    }

    /// Whether `B` does not depend on the state.
    pub fn is_additive(&self) -> bool {
        match &self.kind {
            DiffusionKind::Zero | DiffusionKind::Constant(_) => true,
            DiffusionKind::Shifted { base, .. } => base.is_additive(),
            _ => false,
        }
    }

    pub fn eval(&self, t: f64, v: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            DiffusionKind::Zero => DMatrix::zeros(self.dim_h, self.dim_u),
            DiffusionKind::Constant(m) => m.clone(),
            DiffusionKind::Multiplication {
                lipschitz,
                profile,
                column,
            } => {
                let mut m = DMatrix::zeros(self.dim_h, self.dim_u);
                for (i, x) in v.iter().enumerate() {
                    m[(i, *column)] = lipschitz
                        * match profile {
                            MultiplicationProfile::Linear => *x,
                            MultiplicationProfile::Sine => x.sin(),
                        };
                }
                m
            }
            DiffusionKind::Custom(f) => f(t, v),
            DiffusionKind::Shifted { base, path } => base.eval(t, &(v + path.at(t))),
        }
    }

    /// `B(t, v) z` without forming the matrix when avoidable.
    pub fn apply(&self, t: f64, v: &DVector<f64>, z: &[f64]) -> DVector<f64> {
        match &self.kind {
            DiffusionKind::Zero => DVector::zeros(self.dim_h),
            DiffusionKind::Constant(m) => m * DVector::from_column_slice(z),
            _ => self.eval(t, v) * DVector::from_column_slice(z),
        }
    }

    /// Hilbert–Schmidt norm squared, `Σ_j ‖B e_j‖²_H`.
    pub fn hs_norm_sq(&self, m: &DMatrix<f64>) -> f64 {
        m.row_iter()
            .zip(&self.omega)
            .map(|(row, w)| w * row.norm_squared())
            .sum()
    }

    pub fn hs_norm(&self, m: &DMatrix<f64>) -> f64 {
        self.hs_norm_sq(m).sqrt()
    }
}
