//! Exact sampling of Gaussian paths on a time grid.
//!
//! Paths are built from their increments: the increment covariance
//! `C_ij = ∫_{I_i}∫_{I_j} φ` is Cholesky-factored once, and each block of
//! paths is `L · Z` with `Z` drawn column by column from the per-path stream.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{CovarianceKernel, KernelConfig};
use crate::par::{self, ExecMode};
use crate::rng::{Domain, StreamFamily};

use super::grid::TimeGrid;
use super::noise::NoiseSpec;

/// Columns of `Z` per matrix product.
const BLOCK_COLUMNS: usize = 64;

/// Cholesky factor of the increment covariance on a fixed grid.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    grid: TimeGrid,
    factor: DMatrix<f64>,
    jitter: f64,
    kernel: Option<KernelConfig>,
}

impl GaussianSampler {
    pub fn new(k: &CovarianceKernel, grid: &TimeGrid) -> Result<Self> {
        if grid.horizon() > k.horizon() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "grid horizon {} exceeds kernel horizon {}",
                grid.horizon(),
                k.horizon()
            )));
        }
        let t = grid.nodes();
        let n = t.len() - 1;
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = k.rect_integral(t[i], t[i + 1], t[j], t[j + 1])?;
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let (factor, jitter) = match Cholesky::new(cov.clone()) {
            Some(ch) => (ch.l(), 0.0),
            None => {
                let jitter = 1e-12 * cov.trace();
                let mut repaired = cov;
                for i in 0..n {
                    repaired[(i, i)] += jitter;
                }
                let ch = Cholesky::new(repaired).ok_or_else(|| {
                    Error::Factorization(format!(
                        "increment covariance on {} cells is indefinite beyond jitter {jitter:e}",
                        n
                    ))
                })?;
                (ch.l(), jitter)
            }
        };
        Ok(Self {
            grid: grid.clone(),
            factor,
            jitter,
            kernel: k.config().cloned(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Diagonal jitter that had to be added (0 when the plain factorization succeeded).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Sample `n_coords` independent copies per path, coordinate `c` scaled by
    /// `scales[c]`; output layout `[path][node][coord]`.
    fn sample_block_layout(
        &self,
        first_path: usize,
        n_paths: usize,
        scales: &[f64],
        seed: u64,
        mode: ExecMode,
    ) -> Vec<f64> {
        let m = self.grid.len();
        let cells = m - 1;
        let nc = scales.len();
        let paths_per_block = (BLOCK_COLUMNS / nc).max(1);
        let n_blocks = n_paths.div_ceil(paths_per_block);
        let family = StreamFamily::new(seed, Domain::GaussianNoise);

        let blocks = par::map_indexed(n_blocks, mode, |b| {
            let first = b * paths_per_block;
            let count = paths_per_block.min(n_paths - first);
            let mut z = DMatrix::<f64>::zeros(cells, count * nc);
            for j in 0..count {
                let mut rng = family.stream((first_path + first + j) as u64);
                for c in 0..nc {
                    let mut col = z.column_mut(j * nc + c);
                    for v in col.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                }
            }
            let incr = &self.factor * z;
            let mut out = vec![0.0; count * m * nc];
            for j in 0..count {
                let path = &mut out[j * m * nc..(j + 1) * m * nc];
                for c in 0..nc {
                    let col = incr.column(j * nc + c);
                    let mut acc = 0.0;
                    for i in 0..cells {
                        acc += col[i];
                        path[(i + 1) * nc + c] = scales[c] * acc;
                    }
                }
            }
            out
        });
        blocks.concat()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Scalar,
    Vector,
}

/// Seeded collection of sampled paths.
///
/// Values are stored `[path][node][coord]`; for the vector case coordinate
/// `n` holds `√λ_n g_n(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    pub(crate) grid: TimeGrid,
    pub(crate) n_paths: usize,
    pub(crate) scales: Vec<f64>,
    pub(crate) data: Vec<f64>,
    pub(crate) seed: u64,
    pub(crate) kind: EnsembleKind,
    pub(crate) kernel: Option<KernelConfig>,
}

impl GaussianEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_coords(&self) -> usize {
        self.scales.len()
    }

    /// `√λ_n` per coordinate (`[1.0]` for scalar ensembles).
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn kernel_config(&self) -> Option<&KernelConfig> {
        self.kernel.as_ref()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One path, `m × n_coords` values.
    pub fn path(&self, p: usize) -> &[f64] {
        let w = self.grid.len() * self.n_coords();
        &self.data[p * w..(p + 1) * w]
    }

    pub fn value(&self, p: usize, node: usize, coord: usize) -> f64 {
        self.path(p)[node * self.n_coords() + coord]
    }

    /// Values of one coordinate at one node across all paths.
    pub fn node_samples(&self, node: usize, coord: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.value(p, node, coord)).collect()
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::Domain("n_paths must be at least 1".into()));
    }
    Ok(())
}

/// Paths of the scalar process `g` with covariance `R` at the grid nodes.
pub fn sample_scalar(
    k: &CovarianceKernel,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<GaussianEnsemble> {
    sample_scalar_with(k, grid, n_paths, seed, ExecMode::default())
}

pub fn sample_scalar_with(
    k: &CovarianceKernel,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<GaussianEnsemble> {
    check_paths(n_paths)?;
    let sampler = GaussianSampler::new(k, grid)?;
    Ok(sampler.sample_scalar(n_paths, seed, mode))
}

/// Paths of `G(t) = Σ_n √λ_n g_n(t) e_n` truncated at `N = spec.n_terms()`,
/// with the `g_n` independent copies of `g`.
#[allow(non_snake_case)]
pub fn sample_G(
    k: &CovarianceKernel,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<GaussianEnsemble> {
    sample_g_with(k, spec, grid, n_paths, seed, ExecMode::default())
}

pub fn sample_g_with(
    k: &CovarianceKernel,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<GaussianEnsemble> {
    check_paths(n_paths)?;
    let sampler = GaussianSampler::new(k, grid)?;
    Ok(sampler.sample_vector(spec, n_paths, seed, mode))
}

impl GaussianSampler {
    pub fn sample_scalar(&self, n_paths: usize, seed: u64, mode: ExecMode) -> GaussianEnsemble {
        self.sample_scalar_range(0, n_paths, seed, mode)
    }

    /// Paths `first..first + count` of the ensemble [`Self::sample_scalar`]
    /// would produce with the same seed; lets large ensembles be processed in
    /// chunks.
    pub fn sample_scalar_range(&self, first: usize, count: usize, seed: u64, mode: ExecMode) -> GaussianEnsemble {
        let n_paths = count;
        let data = self.sample_block_layout(first, count, &[1.0], seed, mode);
        GaussianEnsemble {
            grid: self.grid.clone(),
            n_paths,
            scales: vec![1.0],
            data,
            seed,
            kind: EnsembleKind::Scalar,
            kernel: self.kernel.clone(),
        }
    }

    pub fn sample_vector(
        &self,
        spec: &NoiseSpec,
        n_paths: usize,
        seed: u64,
        mode: ExecMode,
    ) -> GaussianEnsemble {
        let scales = spec.sqrt_lambdas();
        let data = self.sample_block_layout(0, n_paths, &scales, seed, mode);
        GaussianEnsemble {
            grid: self.grid.clone(),
            n_paths,
            scales,
            data,
            seed,
            kind: EnsembleKind::Vector,
            kernel: self.kernel.clone(),
        }
    }

    /// A single vector path for Monte Carlo unit `index` of the `seed` family,
    /// `[node][coord]` layout. Matches path `index` of [`Self::sample_vector`].
    pub fn sample_vector_path(&self, spec: &NoiseSpec, index: usize, seed: u64) -> Vec<f64> {
        let m = self.grid.len();
        let scales = spec.sqrt_lambdas();
        let nc = scales.len();
        let family = StreamFamily::new(seed, Domain::GaussianNoise);
        let mut rng = family.stream(index as u64);
        let mut out = vec![0.0; m * nc];
        let mut z = vec![0.0; m - 1];
        for (c, s) in scales.iter().enumerate() {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let mut acc = 0.0;
            for i in 0..m - 1 {
                let row = self.factor.row(i);
                let mut inc = 0.0;
                for j in 0..=i {
                    inc += row[j] * z[j];
                }
                acc += inc;
                out[(i + 1) * nc + c] = s * acc;
            }
        }
        out
    }
}
