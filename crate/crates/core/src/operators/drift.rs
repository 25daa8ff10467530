use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::shift::NoisePath;
use super::space::{GalerkinSpace, TripleKind};

pub type DriftFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Constants declared for the monotonicity, coercivity and growth bounds:
///
/// * `2⟨A(u)−A(v), u−v⟩ ≤ c‖u−v‖²_H`
/// * `2⟨A(v), v⟩ ≤ c1‖v‖²_H − c2‖v‖_V^α + f`
/// * `‖A(v)‖_{V*} ≤ g + c3‖v‖_V^{α−1}`
///
/// `f` and `g` are constant in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub c3: f64,
    pub alpha: f64,
    #[serde(default)]
    pub f: f64,
    #[serde(default)]
    pub g: f64,
}

impl DeclaredConstants {
    pub fn zero(alpha: f64) -> Self {
        Self {
            c: 0.0,
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            alpha,
            f: 0.0,
            g: 0.0,
        }
    }

    /// The dissipative triple `c = c1 = 0`, `c2 = 2`, `c3 = 1`.
    fn dissipative(alpha: f64) -> Self {
        Self {
            c2: 2.0,
            c3: 1.0,
            ..Self::zero(alpha)
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.c, self.c1, self.c2, self.c3, self.alpha, self.f, self.g];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("declared constants must be finite".into()));
        }
        if self.alpha <= 1.0 {
            return Err(Error::Domain(format!("alpha = {} must exceed 1", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum DriftKind {
    Zero,
    LinearHeat,
    PLaplace { p: f64 },
    PorousMedium { m: f64 },
    /// `A(u)_k = d_k u_k`.
    Diagonal { coeffs: Vec<f64> },
    /// `A(u) = −h Sᵀ sign(S u)`; discontinuous along lines.
    Sign,
    Custom(DriftFn),
    Shifted { base: Box<DriftOperator>, path: Arc<NoisePath> },
}

impl fmt::Debug for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftKind::Zero => write!(f, "Zero"),
            DriftKind::LinearHeat => write!(f, "LinearHeat"),
            DriftKind::PLaplace { p } => write!(f, "PLaplace {{ p: {p} }}"),
            DriftKind::PorousMedium { m } => write!(f, "PorousMedium {{ m: {m} }}"),
            DriftKind::Diagonal { coeffs } => write!(f, "Diagonal {{ coeffs: {coeffs:?} }}"),
            DriftKind::Sign => write!(f, "Sign"),
            DriftKind::Custom(_) => write!(f, "Custom(..)"),
            DriftKind::Shifted { base, .. } => write!(f, "Shifted {{ base: {:?} }}", base.kind),
        }
    }
}

/// Discretised drift `A(t, v)` returning coefficients of an element of `V*`
/// in the representation paired by [`GalerkinSpace::pairing`].
#[derive(Debug, Clone)]
pub struct DriftOperator {
    kind: DriftKind,
    space: Arc<GalerkinSpace>,
    constants: DeclaredConstants,
}

fn odd_power(x: f64, m: f64) -> f64 {
    if m.fract() == 0.0 && m.abs() < 64.0 {
        x.abs().powi(m as i32 - 1) * x
    } else {
        x.abs().powf(m - 1.0) * x
    }
}

fn odd_power_derivative(x: f64, m: f64) -> f64 {
    if m == 1.0 {
        1.0
    } else if m.fract() == 0.0 && m.abs() < 64.0 {
        m * x.abs().powi(m as i32 - 1)
    } else {
        m * x.abs().powf(m - 1.0)
    }
}

pub fn make_p_laplace(space: Arc<GalerkinSpace>, p: f64) -> Result<DriftOperator> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("p-Laplace needs p ≥ 2, got {p}")));
    }
    match space.kind() {
        TripleKind::Sobolev { p: q } if q == p => {}
        other => {
            return Err(Error::Domain(format!(
                "p-Laplace with p = {p} needs the W^{{1,{p}}} space, got {other:?}"
            )))
        }
    }
    Ok(DriftOperator {
        kind: DriftKind::PLaplace { p },
        space,
        constants: DeclaredConstants::dissipative(p),
    })
}

pub fn make_porous_medium(space: Arc<GalerkinSpace>, m: f64) -> Result<DriftOperator> {
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("porous medium needs m ≥ 1, got {m}")));
    }
    match space.kind() {
        TripleKind::Lebesgue { q } if q == m + 1.0 => {}
        other => {
            return Err(Error::Domain(format!(
                "porous medium with m = {m} needs the L^{} ⊂ H⁻¹ space, got {other:?}",
                m + 1.0
            )))
        }
    }
    Ok(DriftOperator {
        kind: DriftKind::PorousMedium { m },
        space,
        constants: DeclaredConstants::dissipative(m + 1.0),
    })
}

/// Spectral Laplacian `A(u)_k = −(πk)² u_k`.
pub fn make_linear_heat(space: Arc<GalerkinSpace>) -> Result<DriftOperator> {
    if space.kind() != TripleKind::Spectral {
        return Err(Error::Domain("linear heat operator needs the spectral space".into()));
    }
    Ok(DriftOperator {
        kind: DriftKind::LinearHeat,
        space,
        constants: DeclaredConstants::dissipative(2.0),
    })
}

impl DriftOperator {
    pub fn zero(space: Arc<GalerkinSpace>) -> Self {
        let alpha = space.alpha();
        Self {
            kind: DriftKind::Zero,
            space,
            constants: DeclaredConstants::zero(alpha),
        }
    }

    pub fn diagonal(space: Arc<GalerkinSpace>, coeffs: Vec<f64>, constants: DeclaredConstants) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::dims("diagonal drift", space.dim(), coeffs.len()));
        }
        constants.validate()?;
        Ok(Self {
            kind: DriftKind::Diagonal { coeffs },
            space,
            constants,
        })
    }

    /// Sign nonlinearity; only meaningful on spaces with Euclidean H weights.
    pub fn sign(space: Arc<GalerkinSpace>) -> Self {
        let alpha = space.alpha();
        Self {
            kind: DriftKind::Sign,
            space,
            constants: DeclaredConstants::zero(alpha),
        }
    }

    pub fn custom(space: Arc<GalerkinSpace>, f: DriftFn, constants: DeclaredConstants) -> Result<Self> {
        constants.validate()?;
        Ok(Self {
            kind: DriftKind::Custom(f),
            space,
            constants,
        })
    }

    pub(crate) fn shifted(&self, path: Arc<NoisePath>) -> Self {
        Self {
            kind: DriftKind::Shifted {
                base: Box::new(self.clone()),
                path,
            },
            space: self.space.clone(),
            constants: self.constants,
        }
    }

    pub fn with_constants(mut self, constants: DeclaredConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn space(&self) -> &Arc<GalerkinSpace> {
        &self.space
    }

    pub fn constants(&self) -> &DeclaredConstants {
        &self.constants
    }

    /// Named parameters of the nonlinearity.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match &self.kind {
            DriftKind::PLaplace { p } => vec![("p", *p)],
            DriftKind::PorousMedium { m } => vec![("m", *m)],
            DriftKind::Shifted { base, .. } => base.params(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            DriftKind::Zero => true,
            DriftKind::Shifted { base, .. } => base.is_zero(),
            _ => false,
        }
    }

    pub fn eval(&self, t: f64, v: &DVector<f64>) -> DVector<f64> {
        let s = &self.space;
        match &self.kind {
            DriftKind::Zero => DVector::zeros(v.len()),
            DriftKind::LinearHeat => DVector::from_iterator(v.len(), v.iter().zip(s.eigenvalues()).map(|(x, l)| -l * x)),
            DriftKind::PLaplace { p } => {
                let g = s.gradient_map();
                let beta = (g * v).map(|x| odd_power(x, p - 1.0));
                -g.tr_mul(&beta) * s.norm_weight()
            }
            DriftKind::PorousMedium { m } => {
                let psi = s.synthesize(v).map(|x| odd_power(x, *m));
                let mut out = s.analyze(&psi);
                out.iter_mut().zip(s.eigenvalues()).for_each(|(x, l)| *x *= -l);
                out
            }
            DriftKind::Diagonal { coeffs } => v.component_mul(&DVector::from_column_slice(coeffs)),
            DriftKind::Sign => {
                let sg = s.synthesize(v).map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
                -s.analyze(&sg)
            }
            DriftKind::Custom(f) => f(t, v),
            DriftKind::Shifted { base, path } => base.eval(t, &(v + path.at(t))),
        }
    }

    /// Derivative `∂A/∂v` when it exists in closed form.
    pub fn jacobian(&self, t: f64, v: &DVector<f64>) -> Option<DMatrix<f64>> {
        let s = &self.space;
        let n = v.len();
        match &self.kind {
            DriftKind::Zero => Some(DMatrix::zeros(n, n)),
            DriftKind::LinearHeat => Some(DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                s.eigenvalues().iter().map(|l| -l),
            ))),
            DriftKind::PLaplace { p } => {
                let g = s.gradient_map();
                let d = (g * v).map(|x| (p - 1.0) * x.abs().powf(p - 2.0));
                let gd = DMatrix::from_fn(g.nrows(), n, |i, j| d[i] * g[(i, j)]);
                Some(-g.tr_mul(&gd) * s.norm_weight())
            }
            DriftKind::PorousMedium { m } => {
                let syn = s.synthesis();
                let d = s.synthesize(v).map(|x| odd_power_derivative(x, *m));
                let sd = DMatrix::from_fn(syn.nrows(), n, |i, j| d[i] * syn[(i, j)]);
                let mut jac = syn.tr_mul(&sd) * s.collocation_spacing();
                for (k, l) in s.eigenvalues().iter().enumerate() {
                    jac.row_mut(k).scale_mut(-l);
                }
                Some(jac)
            }
            DriftKind::Diagonal { coeffs } => Some(DMatrix::from_diagonal(&DVector::from_column_slice(coeffs))),
            DriftKind::Sign | DriftKind::Custom(_) => None,
            DriftKind::Shifted { base, path } => base.jacobian(t, &(v + path.at(t))),
        }
    }
}
