//! Monte Carlo checks of the covariance identities of the Gaussian integrals
//! against quadrature oracles.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{weighted_double_integral, CovarianceKernel, KernelKind, TimeFunction};
use crate::stats::{quantile, skewness_kurtosis, z_for_confidence, MeanEstimate};

use super::ensemble::{GaussianSampler, GaussianEnsemble};
use super::grid::TimeGrid;
use super::integrate::{integrate_operator, integrate_scalar, OperatorValuedIntegrand};
use super::noise::NoiseSpec;

/// One Monte Carlo estimate against its oracle.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub mc_estimate: f64,
    pub quadrature_value: f64,
    pub se: f64,
    pub z: f64,
    pub relative_error: f64,
    /// Exact expectation of the left-endpoint sum on this grid, when cheap to
    /// compute (fBm kernels).
    pub grid_target: Option<f64>,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(samples: &[f64], oracle: f64, z: f64, grid_target: Option<f64>) -> Self {
        let est = MeanEstimate::from_samples(samples);
        let relative_error = if oracle != 0.0 {
            ((est.mean - oracle) / oracle).abs()
        } else {
            (est.mean - oracle).abs()
        };
        Self {
            mc_estimate: est.mean,
            quadrature_value: oracle,
            se: est.se,
            z,
            relative_error,
            grid_target,
            pass: est.agrees_with(oracle, z),
        }
    }
}

/// Left-endpoint step version of `f` on the grid.
fn step_on_grid(f: &TimeFunction, grid: &TimeGrid) -> TimeFunction {
    let t = grid.nodes();
    TimeFunction::Step {
        breaks: t.to_vec(),
        values: t[..t.len() - 1].iter().map(|s| f.eval(*s)).collect(),
    }
}

fn grid_target(
    k: &CovarianceKernel,
    f: &TimeFunction,
    h: &TimeFunction,
    grid: &TimeGrid,
) -> Option<f64> {
    if !matches!(k.kind(), KernelKind::Fbm { .. }) {
        return None;
    }
    weighted_double_integral(k, &step_on_grid(f, grid), &step_on_grid(h, grid)).ok()
}

/// `E⟨∫f dg, ∫h dg⟩` by Monte Carlo against `∫∫⟨f(s),h(s')⟩φ(s,s') ds ds'`.
pub fn verify_isometry(
    f: &TimeFunction,
    h: &TimeFunction,
    k: &CovarianceKernel,
    e: &GaussianEnsemble,
    confidence: f64,
) -> Result<IdentityCheck> {
    let a = integrate_scalar(f, e)?;
    let b = integrate_scalar(h, e)?;
    if a.ncols() != b.ncols() {
        return Err(Error::dims("verify_isometry integrands", a.ncols(), b.ncols()));
    }
    let samples: Vec<f64> = (0..e.n_paths()).map(|p| a.row(p).dot(&b.row(p))).collect();
    let oracle = weighted_double_integral(k, f, h)?;
    Ok(IdentityCheck::new(
        &samples,
        oracle,
        z_for_confidence(confidence),
        grid_target(k, f, h, e.grid()),
    ))
}

/// Both covariance identities of the `dG` integral.
#[derive(Debug, Clone, Serialize)]
pub struct DgIdentityReport {
    /// `E[⟨∫h₁dG, x⟩⟨∫h₂dG, y⟩]` vs `∫∫⟨h₂(s')Qh₁(s)*x, y⟩φ`.
    pub pairing: IdentityCheck,
    /// `E⟨∫h₁dG, ∫h₂dG⟩` vs `∫∫Tr(h₂(s')Qh₁(s)*)φ`.
    pub trace: IdentityCheck,
}

impl DgIdentityReport {
    pub fn pass(&self) -> bool {
        self.pairing.pass && self.trace.pass
    }
}

/// Quadrature side of the pairing identity.
pub fn dg_pairing_oracle(
    h1: &OperatorValuedIntegrand,
    h2: &OperatorValuedIntegrand,
    x: &DVector<f64>,
    y: &DVector<f64>,
    spec: &NoiseSpec,
    k: &CovarianceKernel,
) -> Result<f64> {
    // ⟨h₂(s')Qh₁(s)*x, y⟩ = ⟨Q^{1/2}h₁(s)ᵀx, Q^{1/2}h₂(s')ᵀy⟩_U
    let sq = DVector::from_vec(spec.sqrt_lambdas());
    let proj = |h: &OperatorValuedIntegrand, v: &DVector<f64>| {
        let (sq, v) = (sq.clone(), v.clone());
        h.map_to_function(sq.len(), move |m| {
            (m.transpose() * &v).component_mul(&sq).as_slice().to_vec()
        })
    };
    weighted_double_integral(k, &proj(h1, x), &proj(h2, y))
}

/// Quadrature side of the trace identity.
pub fn dg_trace_oracle(
    h1: &OperatorValuedIntegrand,
    h2: &OperatorValuedIntegrand,
    spec: &NoiseSpec,
    k: &CovarianceKernel,
) -> Result<f64> {
    // Tr(h₂(s')Qh₁(s)*) = ⟨h₁(s)Q^{1/2}, h₂(s')Q^{1/2}⟩_HS
    let sq = spec.sqrt_lambdas();
    let dim = h1.dim_h() * h1.dim_u();
    let vectorize = |h: &OperatorValuedIntegrand| {
        let sq = sq.clone();
        h.map_to_function(dim, move |m| {
            let mut out = Vec::with_capacity(m.len());
            for c in 0..m.ncols() {
                for r in 0..m.nrows() {
                    out.push(m[(r, c)] * sq[c]);
                }
            }
            out
        })
    };
    weighted_double_integral(k, &vectorize(h1), &vectorize(h2))
}

#[allow(clippy::too_many_arguments)]
pub fn verify_dg_identities(
    h1: &OperatorValuedIntegrand,
    h2: &OperatorValuedIntegrand,
    x: &DVector<f64>,
    y: &DVector<f64>,
    spec: &NoiseSpec,
    k: &CovarianceKernel,
    e: &GaussianEnsemble,
    confidence: f64,
) -> Result<DgIdentityReport> {
    if h1.dim_h() != h2.dim_h() || h1.dim_u() != h2.dim_u() {
        return Err(Error::dims("verify_dg_identities integrand shapes", h1.dim_h(), h2.dim_h()));
    }
    if x.len() != h1.dim_h() || y.len() != h1.dim_h() {
        return Err(Error::dims("verify_dg_identities test vectors", h1.dim_h(), x.len()));
    }
    if spec.n_terms() != h1.dim_u() {
        return Err(Error::dims("verify_dg_identities noise terms", h1.dim_u(), spec.n_terms()));
    }
    let w1 = integrate_operator(h1, e)?;
    let w2 = integrate_operator(h2, e)?;
    let last = e.grid().len() - 1;
    let mut pairing = Vec::with_capacity(e.n_paths());
    let mut trace = Vec::with_capacity(e.n_paths());
    for p in 0..e.n_paths() {
        let a = w1.at(p, last);
        let b = w2.at(p, last);
        pairing.push(a.dot(x) * b.dot(y));
        trace.push(a.dot(&b));
    }
    let z = z_for_confidence(confidence);
    Ok(DgIdentityReport {
        pairing: IdentityCheck::new(&pairing, dg_pairing_oracle(h1, h2, x, y, spec, k)?, z, None),
        trace: IdentityCheck::new(&trace, dg_trace_oracle(h1, h2, spec, k)?, z, None),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEntry {
    pub i: usize,
    pub j: usize,
    pub empirical: f64,
    pub exact: f64,
    pub se: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    pub nodes: Vec<usize>,
    pub entries: Vec<CovarianceEntry>,
    pub max_abs_z: f64,
    pub max_abs_deviation: f64,
    pub pass: bool,
}

/// `n` node indices spread evenly over `(0, m-1]`.
pub fn even_subgrid(m: usize, n: usize) -> Vec<usize> {
    let last = (m - 1) as f64;
    let mut v: Vec<usize> = (1..=n)
        .map(|j| (j as f64 * last / n as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

/// Empirical `E[g(t_i)g(t_j)]` against `R(t_i,t_j)` on a node subset
/// (coordinate `coord`, rescaled by its `√λ`).
pub fn covariance_fidelity(
    e: &GaussianEnsemble,
    k: &CovarianceKernel,
    nodes: &[usize],
    coord: usize,
    z: f64,
) -> Result<FidelityReport> {
    let t = e.grid().nodes();
    let scale = e.scales()[coord];
    let cols: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&n| e.node_samples(n, coord).into_iter().map(|v| v / scale).collect())
        .collect();
    let mut entries = Vec::new();
    let mut pass = true;
    let mut max_abs_z: f64 = 0.0;
    let mut max_abs_deviation: f64 = 0.0;
    for a in 0..nodes.len() {
        for b in 0..=a {
            let prods: Vec<f64> = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).collect();
            let est = MeanEstimate::from_samples(&prods);
            let exact = k.covariance_r(t[nodes[a]], t[nodes[b]])?;
            let dev = est.mean - exact;
            let z_score = if est.se > 0.0 { dev / est.se } else { 0.0 };
            pass &= est.agrees_with(exact, z);
            max_abs_z = max_abs_z.max(z_score.abs());
            max_abs_deviation = max_abs_deviation.max(dev.abs());
            entries.push(CovarianceEntry {
                i: nodes[a],
                j: nodes[b],
                empirical: est.mean,
                exact,
                se: est.se,
                z_score,
            });
        }
    }
    Ok(FidelityReport {
        nodes: nodes.to_vec(),
        entries,
        max_abs_z,
        max_abs_deviation,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityEntry {
    pub node: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub entries: Vec<NormalityEntry>,
    pub se_skewness: f64,
    pub se_kurtosis: f64,
    pub pass: bool,
}

/// Skewness and excess kurtosis within `z` standard errors of 0 at each node.
pub fn normality_check(e: &GaussianEnsemble, nodes: &[usize], coord: usize, z: f64) -> NormalityReport {
    let n = e.n_paths() as f64;
    let se_skewness = (6.0 / n).sqrt();
    let se_kurtosis = (24.0 / n).sqrt();
    let entries: Vec<NormalityEntry> = nodes
        .iter()
        .map(|&node| {
            let (skewness, excess_kurtosis) = skewness_kurtosis(&e.node_samples(node, coord));
            NormalityEntry {
                node,
                skewness,
                excess_kurtosis,
            }
        })
        .collect();
    let pass = entries
        .iter()
        .all(|x| x.skewness.abs() <= z * se_skewness && x.excess_kurtosis.abs() <= z * se_kurtosis);
    NormalityReport {
        entries,
        se_skewness,
        se_kurtosis,
        pass,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub grid_sizes: Vec<usize>,
    /// 99th percentile over paths of the largest grid increment of `w`.
    pub increment_p99: Vec<f64>,
    pub monotone: bool,
}

/// Refinement proxy for continuity of `w = ∫h dG`: the 99th-percentile
/// maximal grid increment must shrink as the grid is refined.
///
/// Returns `None` unless `h` declares an exponent `p+ε > p`.
pub fn continuity_proxy(
    k: &CovarianceKernel,
    spec: &NoiseSpec,
    h: &OperatorValuedIntegrand,
    grid_sizes: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Option<ContinuityReport>> {
    match h.p_eps_exponent() {
        Some(q) if q > k.p() => {}
        _ => return Ok(None),
    }
    let mut increment_p99 = Vec::new();
    for &m in grid_sizes {
        let grid = TimeGrid::uniform(k.horizon(), m)?;
        let sampler = GaussianSampler::new(k, &grid)?;
        let e = sampler.sample_vector(spec, n_paths, seed, Default::default());
        let w = integrate_operator(h, &e)?;
        let maxima: Vec<f64> = (0..n_paths)
            .map(|p| {
                let path = w.path(p);
                path.chunks(w.dim)
                    .collect::<Vec<_>>()
                    .windows(2)
                    .map(|c| {
                        c[1].iter()
                            .zip(c[0])
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        increment_p99.push(quantile(&maxima, 0.99));
    }
    let monotone = increment_p99.windows(2).all(|w| w[1] < w[0]);
    Ok(Some(ContinuityReport {
        grid_sizes: grid_sizes.to_vec(),
        increment_p99,
        monotone,
    }))
}
