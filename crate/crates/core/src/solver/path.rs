use std::io::Write;

use nalgebra::{DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::TimeGrid;

use super::step::StepDiagnostics;

/// Node values of `X`, the transformed process `Y` and the Gaussian
/// integral `w`, each stored `[node][coefficient]`, with `X = Y + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub(crate) grid: TimeGrid,
    pub(crate) dim: usize,
    pub(crate) run: usize,
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) diagnostics: Vec<StepDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub run: usize,
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

impl SolutionPath {
    pub(crate) fn assemble(grid: TimeGrid, run: usize, ys: Vec<DVector<f64>>, w: Vec<f64>, diagnostics: Vec<StepDiagnostics>) -> Self {
        let dim = ys.first().map_or(0, |v| v.len());
        let y: Vec<f64> = ys.iter().flat_map(|v| v.iter().copied()).collect();
        let x = y.iter().zip(&w).map(|(a, b)| a + b).collect();
        Self {
            grid,
            dim,
            run,
            x,
            y,
            w,
            diagnostics,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn run(&self) -> usize {
        self.run
    }

    pub fn x(&self, k: usize) -> DVectorView<'_, f64> {
        DVectorView::from_slice(&self.x[k * self.dim..(k + 1) * self.dim], self.dim)
    }

    pub fn y(&self, k: usize) -> DVectorView<'_, f64> {
        DVectorView::from_slice(&self.y[k * self.dim..(k + 1) * self.dim], self.dim)
    }

    pub fn w(&self, k: usize) -> DVectorView<'_, f64> {
        DVectorView::from_slice(&self.w[k * self.dim..(k + 1) * self.dim], self.dim)
    }

    pub fn final_x(&self) -> DVector<f64> {
        self.x(self.grid.len() - 1).into_owned()
    }

    pub fn x_data(&self) -> &[f64] {
        &self.x
    }

    pub fn y_data(&self) -> &[f64] {
        &self.y
    }

    pub fn w_data(&self) -> &[f64] {
        &self.w
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn summary(&self) -> DiagnosticsSummary {
        DiagnosticsSummary {
            run: self.run,
            steps: self.diagnostics.len(),
            total_iterations: self.diagnostics.iter().map(|d| d.iterations).sum(),
            max_iterations: self.diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0),
            max_residual: self.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max),
        }
    }

    /// Rows `t,index,X,Y,w`, one per node and coefficient; `header` lines are
    /// written first with a `# ` prefix.
    pub fn write_csv<W: Write>(&self, header: &[String], mut out: W) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "t,index,X,Y,w")?;
        for (k, t) in self.grid.nodes().iter().enumerate() {
            for i in 0..self.dim {
                let j = k * self.dim + i;
                writeln!(out, "{t:.16e},{i},{:.16e},{:.16e},{:.16e}", self.x[j], self.y[j], self.w[j])?;
            }
        }
        Ok(())
    }
}
