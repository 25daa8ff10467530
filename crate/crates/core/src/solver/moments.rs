use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::GalerkinSpace;
use crate::stats::MeanEstimate;

use super::path::SolutionPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n_runs: usize,
    /// `max_k mean ‖X(t_k)‖²_H`.
    pub sup_t_mean_h2: f64,
    pub sup_node: usize,
    pub sup_se: f64,
    /// Mean of the left-endpoint sum `Σ_k dt_k ‖X(t_k)‖_V^α`.
    pub mean_v_alpha: f64,
    pub se_v_alpha: f64,
}

pub fn estimate_moments(runs: &[SolutionPath], space: &GalerkinSpace) -> Result<MomentReport> {
    let first = runs.first().ok_or_else(|| Error::Domain("no runs to average".into()))?;
    let grid = first.grid();
    for r in runs {
        if r.grid() != grid || r.dim() != space.dim() {
            return Err(Error::dims("run layout", grid.len() * space.dim(), r.grid().len() * r.dim()));
        }
    }
    let alpha = space.alpha();
    let m = grid.len();
    let mut best = (f64::NEG_INFINITY, 0, 0.0);
    for k in 0..m {
        let vals: Vec<f64> = runs.iter().map(|r| space.h_norm(&r.x(k).into_owned()).powi(2)).collect();
        let est = MeanEstimate::from_samples(&vals);
        if est.mean > best.0 {
            best = (est.mean, k, est.se);
        }
    }
    let integrals: Vec<f64> = runs
        .iter()
        .map(|r| {
            (0..m - 1)
                .map(|k| grid.step(k) * space.v_norm(&r.x(k).into_owned()).powf(alpha))
                .sum()
        })
        .collect();
    let v = MeanEstimate::from_samples(&integrals);
    Ok(MomentReport {
        n_runs: runs.len(),
        sup_t_mean_h2: best.0,
        sup_node: best.1,
        sup_se: best.2,
        mean_v_alpha: v.mean,
        se_v_alpha: v.se,
    })
}
