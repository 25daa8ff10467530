use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending time nodes `0 = t_0 < … < t_{m-1} = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// `m` equally spaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("a grid needs at least 2 nodes, got {m}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be > 0, got {horizon}")));
        }
        let cells = (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| horizon * (i as f64 / cells)).collect();
        nodes[m - 1] = horizon;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain("a grid needs at least 2 nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Domain(format!("grid must start at 0, got {}", nodes[0])));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Domain("grid nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// The common step when the grid is uniform (to relative 1e-12).
    pub fn uniform_step(&self) -> Option<f64> {
        let dt = self.horizon() / (self.len() - 1) as f64;
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt)
            .then_some(dt)
    }

    /// Every `stride`-th node; `stride` must divide `len() - 1`.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::Domain(format!(
                "stride {stride} does not divide {} cells",
                self.len() - 1
            )));
        }
        Self::from_nodes(self.nodes.iter().step_by(stride).copied().collect())
    }

    /// Index of the node `t` lies on, or of the node opening the cell
    /// `[t_k, t_{k+1})` containing `t`.
    pub fn locate(&self, t: f64) -> usize {
        let tol = 1e-12 * self.horizon();
        let k = self.nodes.partition_point(|x| *x <= t + tol);
        k.saturating_sub(1).min(self.len() - 1)
    }
}
