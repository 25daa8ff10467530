//! Stochastic integrals of deterministic integrands against sampled paths,
//! as left-endpoint Riemann–Stieltjes sums on the ensemble grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::TimeFunction;

use super::ensemble::GaussianEnsemble;
use super::grid::TimeGrid;

/// Time dependence of an operator-valued integrand `h(t) ∈ L(U, 𝓗)`,
/// stored as `dim_h × dim_u` coefficient matrices.
#[derive(Debug, Clone)]
pub enum OperatorProfile {
    Constant(DMatrix<f64>),
    /// `h(t) = scale(t) · matrix` for a scalar `scale`.
    Scaled {
        matrix: DMatrix<f64>,
        scale: TimeFunction,
    },
    /// `h(t) = matrices[i]` on `[breaks[i], breaks[i+1])`.
    Step {
        breaks: Vec<f64>,
        matrices: Vec<DMatrix<f64>>,
    },
}

/// Operator-valued integrand of the `dG` integral, with the integrability
/// exponent declared for it and, optionally, the finite set of modes its
/// range is projected onto.
#[derive(Debug, Clone)]
pub struct OperatorValuedIntegrand {
    dim_h: usize,
    dim_u: usize,
    profile: OperatorProfile,
    p_eps_exponent: Option<f64>,
    range_projection: Option<Vec<usize>>,
}

impl OperatorValuedIntegrand {
    pub fn new(profile: OperatorProfile) -> Result<Self> {
        let (dim_h, dim_u) = match &profile {
            OperatorProfile::Constant(m) => m.shape(),
            OperatorProfile::Scaled { matrix, scale } => {
                if scale.dim() != 1 {
                    return Err(Error::dims("operator scale profile", 1, scale.dim()));
                }
                matrix.shape()
            }
            OperatorProfile::Step { breaks, matrices } => {
                if matrices.is_empty() || breaks.len() != matrices.len() + 1 {
                    return Err(Error::dims(
                        "operator step breaks",
                        matrices.len() + 1,
                        breaks.len(),
                    ));
                }
                let shape = matrices[0].shape();
                if let Some(m) = matrices.iter().find(|m| m.shape() != shape) {
                    return Err(Error::dims("operator step matrices", shape.0, m.nrows()));
                }
                shape
            }
        };
        let finite = match &profile {
            OperatorProfile::Constant(m) | OperatorProfile::Scaled { matrix: m, .. } => {
                m.iter().all(|x| x.is_finite())
            }
            OperatorProfile::Step { matrices, .. } => {
                matrices.iter().all(|m| m.iter().all(|x| x.is_finite()))
            }
        };
        if !finite {
            return Err(Error::Domain("operator integrand has non-finite entries".into()));
        }
        Ok(Self {
            dim_h,
            dim_u,
            profile,
            p_eps_exponent: None,
            range_projection: None,
        })
    }

    pub fn constant(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(OperatorProfile::Constant(matrix))
    }

    pub fn zero(dim_h: usize, dim_u: usize) -> Self {
        Self::constant(DMatrix::zeros(dim_h, dim_u)).expect("zero matrix is valid")
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n)).expect("identity is valid")
    }

    /// `h z = Σ_{k ∈ modes} ⟨z, e_k⟩_U e_k`, with the range recorded as the
    /// projection data.
    pub fn mode_projection(dim_h: usize, dim_u: usize, modes: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(dim_h, dim_u);
        for &k in modes {
            if k >= dim_h || k >= dim_u {
                return Err(Error::dims("projection mode", dim_h.min(dim_u), k + 1));
            }
            m[(k, k)] = 1.0;
        }
        Self::constant(m)?.with_projection(modes.to_vec())
    }

    /// Declare `h ∈ L^{p+ε}` with the given exponent `p+ε`.
    pub fn with_exponent(mut self, p_eps: f64) -> Self {
        self.p_eps_exponent = Some(p_eps);
        self
    }

    /// Declare `h = P·h` for the projection onto the given coefficient modes.
    pub fn with_projection(mut self, modes: Vec<usize>) -> Result<Self> {
        let outside = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .filter(|r| !modes.contains(r))
                .any(|r| m.row(r).iter().any(|x| *x != 0.0))
        };
        let leaks = match &self.profile {
            OperatorProfile::Constant(m) | OperatorProfile::Scaled { matrix: m, .. } => outside(m),
            OperatorProfile::Step { matrices, .. } => matrices.iter().any(outside),
        };
        if leaks {
            return Err(Error::Range(format!(
                "integrand has rows outside the projection modes {modes:?}"
            )));
        }
        self.range_projection = Some(modes);
        Ok(self)
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn profile(&self) -> &OperatorProfile {
        &self.profile
    }

    pub fn p_eps_exponent(&self) -> Option<f64> {
        self.p_eps_exponent
    }

    pub fn range_projection(&self) -> Option<&[usize]> {
        self.range_projection.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        match &self.profile {
            OperatorProfile::Constant(m) | OperatorProfile::Scaled { matrix: m, .. } => {
                m.iter().all(|x| *x == 0.0)
            }
            OperatorProfile::Step { matrices, .. } => {
                matrices.iter().all(|m| m.iter().all(|x| *x == 0.0))
            }
        }
    }

    /// `h(t)`.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match &self.profile {
            OperatorProfile::Constant(m) => m.clone(),
            OperatorProfile::Scaled { matrix, scale } => matrix * scale.eval(t)[0],
            OperatorProfile::Step { breaks, matrices } => {
                let last = breaks.len() - 1;
                if t < breaks[0] || t > breaks[last] {
                    return DMatrix::zeros(self.dim_h, self.dim_u);
                }
                let idx = breaks.partition_point(|b| *b <= t).clamp(1, last) - 1;
                matrices[idx].clone()
            }
        }
    }

    /// Apply `map` to `h(t)` for every `t`, producing a vector-valued
    /// [`TimeFunction`] with the same time structure.
    pub fn map_to_function<F>(&self, dim: usize, map: F) -> TimeFunction
    where
        F: Fn(&DMatrix<f64>) -> Vec<f64> + Send + Sync + 'static,
    {
        match &self.profile {
            OperatorProfile::Constant(m) => TimeFunction::constant(map(m)),
            OperatorProfile::Step { breaks, matrices } => TimeFunction::Step {
                breaks: breaks.clone(),
                values: matrices.iter().map(&map).collect(),
            },
            OperatorProfile::Scaled { matrix, scale } => {
                let base = map(matrix);
                let scale = scale.clone();
                TimeFunction::Closure {
                    dim,
                    f: std::sync::Arc::new(move |t, out: &mut [f64]| {
                        let s = scale.eval(t)[0];
                        for (o, b) in out.iter_mut().zip(&base) {
                            *o = s * b;
                        }
                    }),
                }
            }
        }
    }
}

/// `∫_0^T f dg` per path for a scalar ensemble, as an `n_paths × dim(f)` matrix.
pub fn integrate_scalar(f: &TimeFunction, e: &GaussianEnsemble) -> Result<DMatrix<f64>> {
    integrate_scalar_until(f, e, e.grid().len() - 1)
}

/// `∫_0^{t_node} f dg` per path.
pub fn integrate_scalar_until(
    f: &TimeFunction,
    e: &GaussianEnsemble,
    node: usize,
) -> Result<DMatrix<f64>> {
    if e.n_coords() != 1 {
        return Err(Error::dims("integrate_scalar ensemble coordinates", 1, e.n_coords()));
    }
    let dim = f.dim();
    let t = e.grid().nodes();
    let fvals: Vec<Vec<f64>> = t[..node].iter().map(|s| f.eval(*s)).collect();
    let mut out = DMatrix::zeros(e.n_paths(), dim);
    for p in 0..e.n_paths() {
        let path = e.path(p);
        for (i, fv) in fvals.iter().enumerate() {
            let dg = path[i + 1] - path[i];
            for (d, v) in fv.iter().enumerate() {
                out[(p, d)] += v * dg;
            }
        }
    }
    Ok(out)
}

/// 𝓗-valued paths, `[path][node][component]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertPaths {
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl HilbertPaths {
    pub fn path(&self, p: usize) -> &[f64] {
        let w = self.grid.len() * self.dim;
        &self.data[p * w..(p + 1) * w]
    }

    pub fn at(&self, p: usize, node: usize) -> DVector<f64> {
        let s = &self.path(p)[node * self.dim..(node + 1) * self.dim];
        DVector::from_column_slice(s)
    }
}

/// `w(t_k) = Σ_{i<k} h(t_i) (G(t_{i+1}) - G(t_i))` on the ensemble grid.
///
/// `G`'s coordinates already carry the `√λ_n` factors, so this equals
/// `Σ_n √λ_n Σ_{i<k} h(t_i) e_n (g_n(t_{i+1}) - g_n(t_i))`.
pub fn integrate_operator(h: &OperatorValuedIntegrand, e: &GaussianEnsemble) -> Result<HilbertPaths> {
    if h.dim_u() != e.n_coords() {
        return Err(Error::dims("integrate_operator noise coordinates", h.dim_u(), e.n_coords()));
    }
    let grid = e.grid().clone();
    let m = grid.len();
    let dim = h.dim_h();
    let mats: Vec<DMatrix<f64>> = grid.nodes()[..m - 1].iter().map(|t| h.at(*t)).collect();
    let mut data = vec![0.0; e.n_paths() * m * dim];
    for p in 0..e.n_paths() {
        integrate_operator_path(&mats, e.path(p), e.n_coords(), &mut data[p * m * dim..(p + 1) * m * dim]);
    }
    Ok(HilbertPaths {
        grid,
        n_paths: e.n_paths(),
        dim,
        data,
    })
}

/// Single-path kernel of [`integrate_operator`]: `noise` is `[node][coord]`,
/// `out` is `[node][component]` and is overwritten.
pub fn integrate_operator_path(mats: &[DMatrix<f64>], noise: &[f64], n_coords: usize, out: &mut [f64]) {
    let dim = mats.first().map_or(0, |m| m.nrows());
    out[..dim].iter_mut().for_each(|x| *x = 0.0);
    let mut inc = vec![0.0; n_coords];
    for (i, h) in mats.iter().enumerate() {
        for c in 0..n_coords {
            inc[c] = noise[(i + 1) * n_coords + c] - noise[i * n_coords + c];
        }
        let (prev, next) = out.split_at_mut((i + 1) * dim);
        let prev = &prev[i * dim..];
        for r in 0..dim {
            let mut acc = prev[r];
            for c in 0..n_coords {
                acc += h[(r, c)] * inc[c];
            }
            next[r] = acc;
        }
    }
}
