use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::stats::{fit_slope, MeanEstimate};

use super::config::{InitialState, SolverConfig};
use super::pipeline::{aggregate_increments, restrict_path, wiener_increments, Problem, Simulation};

/// Reference step is the finest `dt` divided by this.
pub const REFERENCE_REFINEMENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub dt: f64,
    /// Mean of `‖X_dt(T) − X_ref(T)‖_H` over runs.
    pub error: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub reference_dt: f64,
    pub n_runs: usize,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log error` against `log dt`; absent when some
    /// error vanishes.
    pub slope: Option<f64>,
}

/// Strong errors at `T` against a reference solve at `min(dt_list)/4`, all
/// sharing one noise realisation per run: Wiener increments are summed from
/// the reference grid and `G` is sampled there and restricted.
pub fn convergence_study(
    problem: &Problem,
    x0: &InitialState,
    base: &SolverConfig,
    dt_list: &[f64],
    n_runs: usize,
    mode: ExecMode,
) -> Result<RateTable> {
    if dt_list.is_empty() || n_runs == 0 {
        return Err(Error::Domain("need at least one dt and one run".into()));
    }
    let dt_min = dt_list.iter().copied().fold(f64::INFINITY, f64::min);
    let mut ref_cfg = base.clone();
    ref_cfg.dt = dt_min / REFERENCE_REFINEMENT as f64;
    let reference = Simulation::new(problem, ref_cfg.clone())?;
    let ref_steps = reference.grid().len() - 1;
    let mut coarse = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let mut cfg = base.clone();
        cfg.dt = dt;
        let ratio = dt / ref_cfg.dt;
        let stride = ratio.round() as usize;
        if (ratio - stride as f64).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!("dt = {dt} is not a multiple of the reference step")));
        }
        coarse.push((stride, Simulation::new(problem, cfg)?));
    }
    let du = problem.diffusion.dim_u();
    let nc = problem.noise.n_terms();
    let space = problem.drift.space();
    let errors: Vec<Result<Vec<f64>>> = par::map_indexed(n_runs, mode, |r| {
        let start = x0.draw(r);
        let dw = if problem.diffusion.is_zero() {
            Vec::new()
        } else {
            wiener_increments(base.seed_w, r, ref_steps, du, ref_cfg.dt)
        };
        let g = reference.gaussian_path(r);
        let xref = reference.run_with_noise(&start, &dw, g.as_deref(), r)?.final_x();
        coarse
            .iter()
            .map(|(stride, sim)| {
                let dwc = if dw.is_empty() {
                    Vec::new()
                } else {
                    aggregate_increments(&dw, du, *stride)
                };
                let gc = g.as_ref().map(|g| restrict_path(g, nc, *stride));
                let x = sim.run_with_noise(&start, &dwc, gc.as_deref(), r)?.final_x();
                Ok(space.h_norm(&(x - &xref)))
            })
            .collect()
    });
    let errors: Vec<Vec<f64>> = errors.into_iter().collect::<Result<_>>()?;
    let rows: Vec<RateRow> = dt_list
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let e: Vec<f64> = errors.iter().map(|r| r[i]).collect();
            let est = MeanEstimate::from_samples(&e);
            RateRow {
                dt,
                error: est.mean,
                se: est.se,
            }
        })
        .collect();
    let slope = (rows.len() >= 2 && rows.iter().all(|r| r.error > 0.0)).then(|| {
        let x: Vec<f64> = rows.iter().map(|r| r.dt.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
        fit_slope(&x, &y)
    });
    Ok(RateTable {
        reference_dt: ref_cfg.dt,
        n_runs,
        rows,
        slope,
    })
}
