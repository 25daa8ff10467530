use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::TimeGrid;
use crate::operators::{pair_constants, DiffusionOperator, DriftOperator, GalerkinSpace};

use super::config::{InnerInit, InnerMethod, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    /// H-norm residual of the accepted implicit solve.
    pub residual: f64,
}

struct Implicit<'a> {
    a: &'a DriftOperator,
    space: &'a GalerkinSpace,
    t: f64,
    dt: f64,
    rhs: &'a DVector<f64>,
}

impl Implicit<'_> {
    fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        y - self.a.eval(self.t, y) * self.dt - self.rhs
    }

    fn norm(&self, r: &DVector<f64>) -> f64 {
        self.space.h_norm(r)
    }
}

const MIN_STEP: f64 = 1e-12;

fn fixed_point_move(p: &Implicit, y: &DVector<f64>, r: &DVector<f64>, rn: f64) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let mut tau = 1.0;
    while tau > MIN_STEP {
        let cand = y - r * tau;
        let rc = p.residual(&cand);
        let rcn = p.norm(&rc);
        if rcn < rn {
            return Some((cand, rc, rcn));
        }
        tau *= 0.5;
    }
    None
}

fn newton_move(
    p: &Implicit,
    y: &DVector<f64>,
    r: &DVector<f64>,
    rn: f64,
) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let jac = p.a.jacobian(p.t, y)?;
    let n = y.len();
    let sys = DMatrix::identity(n, n) - jac * p.dt;
    let step = sys.lu().solve(r)?;
    let mut s = 1.0;
    while s > MIN_STEP {
        let cand = y - &step * s;
        let rc = p.residual(&cand);
        let rcn = p.norm(&rc);
        if rcn <= (1.0 - 1e-4 * s) * rn {
            return Some((cand, rc, rcn));
        }
        s *= 0.5;
    }
    None
}

/// Solves `y − dt·A(t, y) = rhs` to an H-norm residual at most `cfg.inner_tol`.
pub(crate) fn implicit_solve(
    a: &DriftOperator,
    t: f64,
    rhs: &DVector<f64>,
    init: DVector<f64>,
    cfg: &SolverConfig,
    step: usize,
) -> Result<(DVector<f64>, StepDiagnostics)> {
    let p = Implicit {
        a,
        space: a.space(),
        t,
        dt: cfg.dt,
        rhs,
    };
    let mut y = init;
    let mut r = p.residual(&y);
    let mut rn = p.norm(&r);
    let mut it = 0;
    while rn > cfg.inner_tol {
        if it == cfg.inner_max_iter {
            return Err(Error::InnerSolve {
                step,
                iterations: it,
                residual: rn,
            });
        }
        it += 1;
        let moved = match cfg.inner_method {
            InnerMethod::Newton => newton_move(&p, &y, &r, rn).or_else(|| fixed_point_move(&p, &y, &r, rn)),
            InnerMethod::FixedPoint => fixed_point_move(&p, &y, &r, rn),
        };
        match moved {
            Some((ny, nr, nrn)) => {
                y = ny;
                r = nr;
                rn = nrn;
            }
            None => {
                return Err(Error::InnerSolve {
                    step,
                    iterations: it,
                    residual: rn,
                })
            }
        }
    }
    Ok((
        y,
        StepDiagnostics {
            iterations: it,
            residual: rn,
        },
    ))
}

/// Drift-implicit Euler for `dY = Ā(t,Y)dt + B̄(t,Y)dW`:
/// `Y_{k+1} − dt·Ā(t_{k+1}, Y_{k+1}) = Y_k + B̄(t_k, Y_k)ΔW_k`.
///
/// `dw` holds the Wiener increments `[step][coord]`; it may be empty when
/// `B̄ ≡ 0`. Returns the node values and per-step diagnostics.
pub fn solve_transformed(
    a: &DriftOperator,
    b: &DiffusionOperator,
    y0: &DVector<f64>,
    cfg: &SolverConfig,
    dw: &[f64],
) -> Result<(Vec<DVector<f64>>, Vec<StepDiagnostics>)> {
    let steps = cfg.validate(pair_constants(a, b).c)?;
    let n = a.space().dim();
    if y0.len() != n {
        return Err(Error::dims("initial state", n, y0.len()));
    }
    let du = b.dim_u();
    let stochastic = !b.is_zero();
    if stochastic && dw.len() != steps * du {
        return Err(Error::dims("Wiener increments", steps * du, dw.len()));
    }
    let grid = TimeGrid::uniform(cfg.horizon, steps + 1)?;
    let mut ys = Vec::with_capacity(steps + 1);
    let mut diags = Vec::with_capacity(steps);
    ys.push(y0.clone());
    for k in 0..steps {
        let (t0, t1) = (grid.nodes()[k], grid.nodes()[k + 1]);
        let yk = &ys[k];
        let mut rhs = yk.clone();
        if stochastic {
            rhs += b.apply(t0, yk, &dw[k * du..(k + 1) * du]);
        }
        let init = match cfg.inner_init {
            InnerInit::Previous => yk.clone(),
            InnerInit::Zero => DVector::zeros(n),
        };
        let (y, d) = implicit_solve(a, t1, &rhs, init, cfg, k)?;
        ys.push(y);
        diags.push(d);
    }
    Ok((ys, diags))
}
