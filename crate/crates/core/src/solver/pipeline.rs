use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{integrate_operator_path, GaussianSampler, NoiseSpec, OperatorValuedIntegrand, TimeGrid};
use crate::kernel::CovarianceKernel;
use crate::operators::{shift_operators, DiffusionOperator, DriftOperator, NoisePath};
use crate::par::{self, ExecMode};
use crate::rng::{Domain, StreamFamily};

use super::config::{InitialState, SolverConfig};
use super::path::SolutionPath;
use super::step::solve_transformed;

/// `dX = A(t,X)dt + B(t,X)dW + h(t)dG` on the Galerkin space of `drift`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub drift: DriftOperator,
    pub diffusion: DiffusionOperator,
    pub h: OperatorValuedIntegrand,
    pub kernel: CovarianceKernel,
    pub noise: NoiseSpec,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.drift.space().dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.diffusion.dim_h() != n {
            return Err(Error::dims("diffusion rows", n, self.diffusion.dim_h()));
        }
        if self.h.dim_h() != n {
            return Err(Error::dims("integrand rows", n, self.h.dim_h()));
        }
        if self.h.dim_u() != self.noise.n_terms() {
            return Err(Error::dims("integrand columns", self.noise.n_terms(), self.h.dim_u()));
        }
        // outside a Hilbert V the integral must stay in a declared finite range
        let hilbert = self.drift.space().alpha() == 2.0;
        if !hilbert && !self.h.is_zero() && self.h.range_projection().is_none() {
            return Err(Error::Range(
                "V is not a Hilbert space: the integrand needs a declared finite-dimensional range".into(),
            ));
        }
        Ok(())
    }
}

/// Standard Wiener increments `[step][coord]` with variance `dt`, from stream
/// `run` of the `seed` family.
pub fn wiener_increments(seed: u64, run: usize, steps: usize, dim_u: usize, dt: f64) -> Vec<f64> {
    let mut rng = StreamFamily::new(seed, Domain::WienerNoise).stream(run as u64);
    let s = dt.sqrt();
    (0..steps * dim_u).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Sums `factor` consecutive increments into one coarse increment.
pub fn aggregate_increments(fine: &[f64], dim_u: usize, factor: usize) -> Vec<f64> {
    let steps = fine.len() / dim_u / factor;
    let mut out = vec![0.0; steps * dim_u];
    for k in 0..steps {
        for j in 0..factor {
            let src = &fine[(k * factor + j) * dim_u..(k * factor + j + 1) * dim_u];
            for (o, v) in out[k * dim_u..(k + 1) * dim_u].iter_mut().zip(src) {
                *o += v;
            }
        }
    }
    out
}

/// Keeps every `stride`-th node of a `[node][coord]` path.
pub fn restrict_path(fine: &[f64], n_coords: usize, stride: usize) -> Vec<f64> {
    fine.chunks(n_coords).step_by(stride).flatten().copied().collect()
}

/// Solver state shared by all Monte Carlo runs of one problem and time grid.
pub struct Simulation<'a> {
    problem: &'a Problem,
    cfg: SolverConfig,
    grid: TimeGrid,
    sampler: Option<GaussianSampler>,
    mats: Vec<DMatrix<f64>>,
}

impl<'a> Simulation<'a> {
    pub fn new(problem: &'a Problem, cfg: SolverConfig) -> Result<Self> {
        problem.validate()?;
        let steps = cfg.validate(crate::operators::pair_constants(&problem.drift, &problem.diffusion).c)?;
        let grid = TimeGrid::uniform(cfg.horizon, steps + 1)?;
        let (sampler, mats) = if problem.h.is_zero() {
            (None, Vec::new())
        } else {
            let sampler = GaussianSampler::new(&problem.kernel, &grid)?;
            let mats = grid.nodes()[..steps].iter().map(|t| problem.h.at(*t)).collect();
            (Some(sampler), mats)
        };
        Ok(Self {
            problem,
            cfg,
            grid,
            sampler,
            mats,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `G` on this grid for run `run`, `[node][coord]`.
    pub fn gaussian_path(&self, run: usize) -> Option<Vec<f64>> {
        self.sampler
            .as_ref()
            .map(|s| s.sample_vector_path(&self.problem.noise, run, self.cfg.seed_g))
    }

    pub fn wiener_path(&self, run: usize) -> Vec<f64> {
        if self.problem.diffusion.is_zero() {
            return Vec::new();
        }
        let steps = self.grid.len() - 1;
        wiener_increments(self.cfg.seed_w, run, steps, self.problem.diffusion.dim_u(), self.cfg.dt)
    }

    /// Run `run` with its own seeded noise.
    pub fn run(&self, x0: &InitialState, run: usize) -> Result<SolutionPath> {
        x0.validate(self.problem.dim())?;
        let g = self.gaussian_path(run);
        self.run_with_noise(&x0.draw(run), &self.wiener_path(run), g.as_deref(), run)
    }

    /// One solve with explicit noise: Wiener increments `dw` and, when the
    /// integrand is nonzero, the node values `g` of `G` on this grid.
    pub fn run_with_noise(&self, x0: &DVector<f64>, dw: &[f64], g: Option<&[f64]>, run: usize) -> Result<SolutionPath> {
        let n = self.problem.dim();
        let m = self.grid.len();
        let mut w = vec![0.0; m * n];
        if let Some(g) = g {
            let nc = self.problem.noise.n_terms();
            if g.len() != m * nc {
                return Err(Error::dims("Gaussian path", m * nc, g.len()));
            }
            integrate_operator_path(&self.mats, g, nc, &mut w);
        }
        let path = Arc::new(NoisePath::new(self.grid.clone(), n, &w)?);
        let (a, b) = shift_operators(
            &self.problem.drift,
            &self.problem.diffusion,
            path,
            self.problem.h.range_projection(),
        )?;
        // X(0) = Y(0) since w(0) = 0
        let (ys, diags) = solve_transformed(&a, &b, x0, &self.cfg, dw)?;
        Ok(SolutionPath::assemble(self.grid.clone(), run, ys, w, diags))
    }

    /// Independent runs `0..n_runs`, in parallel when `mode` allows.
    pub fn ensemble(&self, x0: &InitialState, n_runs: usize, mode: ExecMode) -> Result<Vec<SolutionPath>> {
        if n_runs == 0 {
            return Err(Error::Domain("n_runs must be at least 1".into()));
        }
        par::map_indexed(n_runs, mode, |r| self.run(x0, r)).into_iter().collect()
    }
}

/// Single solve (run 0): sample `G`, build `w = ∫h dG`, shift the operators,
/// step the transformed equation and return `X = Y + w`.
pub fn solve_spde(problem: &Problem, x0: &InitialState, cfg: &SolverConfig) -> Result<SolutionPath> {
    Simulation::new(problem, cfg.clone())?.run(x0, 0)
}
