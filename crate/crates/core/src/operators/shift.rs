use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gaussian::TimeGrid;

use super::diffusion::DiffusionOperator;
use super::drift::DriftOperator;

/// Node values of one realisation of `w = ∫ h dG`, looked up left-closed:
/// on `[t_k, t_{k+1})` the path equals `w(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl NoisePath {
    /// `data` is `[node][component]`.
    pub fn new(grid: TimeGrid, dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("noise path needs at least one component".into()));
        }
        if data.len() != grid.len() * dim {
            return Err(Error::dims("noise path values", grid.len() * dim, data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Range("noise path has non-finite values".into()));
        }
        let values = data.chunks(dim).map(DVector::from_column_slice).collect();
        Ok(Self { grid, dim, values })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        let values = vec![DVector::zeros(dim); grid.len()];
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, k: usize) -> &DVector<f64> {
        &self.values[k]
    }

    pub fn at(&self, t: f64) -> &DVector<f64> {
        &self.values[self.grid.locate(t)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| *x == 0.0))
    }
}

/// `Ā(t, v) = A(t, v + w(t))`, `B̄(t, v) = B(t, v + w(t))`.
///
/// `range` lists the coefficient modes `w` is declared to live in; any
/// nonzero component elsewhere is a [`Error::Range`].
pub fn shift_operators(
    a: &DriftOperator,
    b: &DiffusionOperator,
    w: Arc<NoisePath>,
    range: Option<&[usize]>,
) -> Result<(DriftOperator, DiffusionOperator)> {
    let n = a.space().dim();
    if w.dim() != n {
        return Err(Error::Range(format!(
            "noise path has {} components but the Galerkin space has {n}",
            w.dim()
        )));
    }
    if b.dim_h() != n {
        return Err(Error::dims("diffusion rows", n, b.dim_h()));
    }
    if let Some(modes) = range {
        for (k, v) in w.values.iter().enumerate() {
            if let Some(i) = (0..n).find(|i| !modes.contains(i) && v[*i] != 0.0) {
                return Err(Error::Range(format!(
                    "noise path component {i} at node {k} lies outside the declared range {modes:?}"
                )));
            }
        }
    }
    Ok((a.shifted(w.clone()), b.shifted(w)))
}
