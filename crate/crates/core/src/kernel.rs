//! Covariance kernels `φ` of the driving scalar Gaussian process and the
//! double integrals they induce.
//!
//! The covariance of `g` is `R(t,s) = ∫_0^t ∫_0^s φ(u,v) du dv`. For the
//! fractional kernel `φ(u,v) = H(2H-1)|u-v|^{2H-2}` everything is computed
//! from the closed form of `R`; other kernels go through quadrature in
//! rotated coordinates `τ = u - v`, which isolates the diagonal singularity
//! at an interval endpoint.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_gauss, tanh_sinh};

/// Relative tolerance of all kernel quadratures.
pub const QUAD_TOL: f64 = 1e-10;

pub type StationaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TwoPointFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelKind {
    /// `Ψ(u) = H(2H-1)|u|^{2H-2}`.
    Fbm { hurst: f64 },
    /// `φ(u,v) = Ψ(u-v)` with `Ψ` even and in `L^r`.
    Stationary { psi: StationaryFn, r: f64 },
    /// Arbitrary symmetric `φ`, singular at most on the diagonal.
    General { phi: TwoPointFn },
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Fbm { hurst } => write!(f, "Fbm {{ hurst: {hurst} }}"),
            KernelKind::Stationary { r, .. } => write!(f, "Stationary {{ r: {r} }}"),
            KernelKind::General { .. } => write!(f, "General"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryForm {
    /// `Ψ(u) = coefficient · |u|^{-exponent}`, `0 < exponent < 1`.
    Power,
    /// `Ψ(u) = coefficient · exp(-|u| / length_scale)`.
    Exponential,
}

/// Serializable kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelConfig {
    Fbm {
        #[serde(alias = "H")]
        hurst: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
    },
    General {
        form: StationaryForm,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficient: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exponent: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length_scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
    },
}

impl KernelConfig {
    pub fn build(&self) -> Result<CovarianceKernel> {
        let (kernel, r, horizon) = match self {
            KernelConfig::Fbm { hurst, r, horizon } => (make_fbm_kernel(*hurst)?, *r, *horizon),
            KernelConfig::General {
                form,
                coefficient,
                exponent,
                length_scale,
                r,
                horizon,
            } => {
                let c = coefficient.unwrap_or(1.0);
                if !(c > 0.0) {
                    return Err(Error::Domain(format!("kernel coefficient must be > 0, got {c}")));
                }
                let k = match form {
                    StationaryForm::Power => {
                        let g = exponent.ok_or_else(|| {
                            Error::Config("power kernel needs `exponent`".into())
                        })?;
                        if !(g > 0.0 && g < 1.0) {
                            return Err(Error::Domain(format!(
                                "power kernel exponent must lie in (0,1), got {g}"
                            )));
                        }
                        let r0 = 0.5 * (1.0 + 1.0 / g);
                        CovarianceKernel::stationary(
                            Arc::new(move |u: f64| c * u.abs().powf(-g)),
                            r0,
                            true,
                        )?
                    }
                    StationaryForm::Exponential => {
                        let l = length_scale.unwrap_or(1.0);
                        if !(l > 0.0) {
                            return Err(Error::Domain(format!(
                                "length_scale must be > 0, got {l}"
                            )));
                        }
                        CovarianceKernel::stationary(
                            Arc::new(move |u: f64| c * (-u.abs() / l).exp()),
                            2.0,
                            false,
                        )?
                    }
                };
                (k, *r, *horizon)
            }
        };
        let mut kernel = match r {
            Some(r) => kernel.with_r(r)?,
            None => kernel,
        };
        if let Some(t) = horizon {
            kernel = kernel.with_horizon(t)?;
        }
        kernel.config = Some(self.clone());
        if let Some(cfg) = kernel.config.as_mut() {
            cfg.resolve(kernel.r, kernel.horizon);
        }
        Ok(kernel)
    }

    fn resolve(&mut self, r_value: Option<f64>, t: f64) {
        match self {
            KernelConfig::Fbm { r, horizon, .. } | KernelConfig::General { r, horizon, .. } => {
                *r = r_value;
                *horizon = Some(t);
            }
        }
    }
}

/// A covariance kernel together with the exponents of the integrability
/// condition and the horizon `T` it lives on.
#[derive(Clone)]
pub struct CovarianceKernel {
    kind: KernelKind,
    r: Option<f64>,
    p: f64,
    horizon: f64,
    singular_on_diagonal: bool,
    config: Option<KernelConfig>,
}

impl fmt::Debug for CovarianceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovarianceKernel")
            .field("kind", &self.kind)
            .field("r", &self.r)
            .field("p", &self.p)
            .field("horizon", &self.horizon)
            .field("singular_on_diagonal", &self.singular_on_diagonal)
            .finish()
    }
}

fn p_from_r(r: f64) -> f64 {
    2.0 * r / (2.0 * r - 1.0)
}

/// Fractional kernel with Hurst index `H ∈ (1/2, 1)`.
///
/// `r` defaults to the midpoint of the admissible range `(1, 1/(2-2H))`, and
/// `p = 2r/(2r-1)`.
pub fn make_fbm_kernel(hurst: f64) -> Result<CovarianceKernel> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::Domain(format!(
            "Hurst index must lie in (1/2, 1), got {hurst}"
        )));
    }
    let r = 0.5 * (1.0 + 1.0 / (2.0 - 2.0 * hurst));
    let mut k = CovarianceKernel {
        kind: KernelKind::Fbm { hurst },
        r: Some(r),
        p: p_from_r(r),
        horizon: 1.0,
        singular_on_diagonal: true,
        config: None,
    };
    k.config = Some(KernelConfig::Fbm {
        hurst,
        r: Some(r),
        horizon: Some(1.0),
    });
    Ok(k)
}

impl CovarianceKernel {
    pub fn stationary(psi: StationaryFn, r: f64, singular_on_diagonal: bool) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::Domain(format!("r must lie in (1, ∞), got {r}")));
        }
        Ok(Self {
            kind: KernelKind::Stationary { psi, r },
            r: Some(r),
            p: p_from_r(r),
            horizon: 1.0,
            singular_on_diagonal,
            config: None,
        })
    }

    /// A general symmetric kernel with a user-supplied exponent `p ∈ (1, ∞)`.
    pub fn general(phi: TwoPointFn, p: f64, singular_on_diagonal: bool) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p must lie in (1, ∞), got {p}")));
        }
        Ok(Self {
            kind: KernelKind::General { phi },
            r: None,
            p,
            horizon: 1.0,
            singular_on_diagonal,
            config: None,
        })
    }

    /// Override the integrability exponent `r` (and with it `p`).
    pub fn with_r(mut self, r: f64) -> Result<Self> {
        let upper = match &self.kind {
            KernelKind::Fbm { hurst } => 1.0 / (2.0 - 2.0 * hurst),
            KernelKind::Stationary { .. } => f64::INFINITY,
            KernelKind::General { .. } => {
                return Err(Error::Domain("general kernels carry p, not r".into()))
            }
        };
        if !(r > 1.0 && r < upper) {
            return Err(Error::Domain(format!(
                "r must lie in (1, {upper}) for this kernel, got {r}"
            )));
        }
        if let KernelKind::Stationary { r: inner, .. } = &mut self.kind {
            *inner = r;
        }
        self.r = Some(r);
        self.p = p_from_r(r);
        if let Some(cfg) = self.config.as_mut() {
            cfg.resolve(Some(r), self.horizon);
        }
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be > 0, got {horizon}")));
        }
        self.horizon = horizon;
        if let Some(cfg) = self.config.as_mut() {
            cfg.resolve(self.r, horizon);
        }
        Ok(self)
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> Option<f64> {
        self.r
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn singular_on_diagonal(&self) -> bool {
        self.singular_on_diagonal
    }

    pub fn hurst(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Fbm { hurst } => Some(hurst),
            _ => None,
        }
    }

    /// The resolved config record, when the kernel was built from one (or is fBm).
    pub fn config(&self) -> Option<&KernelConfig> {
        self.config.as_ref()
    }

    /// `φ(u, v)`; `+∞` on the diagonal for singular kernels.
    pub fn evaluate(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            KernelKind::Fbm { hurst } => fbm_psi(*hurst, u - v),
            KernelKind::Stationary { psi, .. } => psi((u - v).abs()),
            KernelKind::General { phi } => phi(u, v),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if t < -slack || t > self.horizon + slack || t.is_nan() {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `R(t, s)`, closed form for fBm and quadrature otherwise.
    pub fn covariance_r(&self, t: f64, s: f64) -> Result<f64> {
        self.check_time(t)?;
        self.check_time(s)?;
        match self.kind {
            KernelKind::Fbm { hurst } => Ok(fbm_r(hurst, t, s)),
            _ => self.rect_quadrature(0.0, t, 0.0, s),
        }
    }

    /// `R(t, s)` by quadrature of `φ`, regardless of kind.
    pub fn covariance_r_quadrature(&self, t: f64, s: f64) -> Result<f64> {
        self.check_time(t)?;
        self.check_time(s)?;
        self.rect_quadrature(0.0, t, 0.0, s)
    }

    /// `∫_a^b ∫_c^d φ(u,v) dv du`, which is also `Cov(g(b)-g(a), g(d)-g(c))`.
    pub fn rect_integral(&self, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
        match self.kind {
            KernelKind::Fbm { hurst } => Ok(fbm_increment_cov(hurst, a, b, c, d)),
            _ => self.rect_quadrature(a, b, c, d),
        }
    }

    /// Quadrature of `∫_a^b ∫_c^d w(u,v) φ(u,v) dv du` in the rotated variable
    /// `τ = u - v`. `inner(τ, lo, hi)` must return `∫_lo^hi w(u, u-τ) du`
    /// (already multiplied by `φ(u, u-τ)` for non-stationary kernels).
    fn rotated<I>(&self, a: f64, b: f64, c: f64, d: f64, abs_kernel: bool, inner: I) -> Result<f64>
    where
        I: Fn(f64, f64, f64) -> Result<f64>,
    {
        if b <= a || d <= c {
            return Ok(0.0);
        }
        let lo = a - d;
        let hi = b - c;
        let mut cuts = vec![lo, hi, a - c, b - d, 0.0];
        cuts.retain(|x| *x >= lo && *x <= hi);
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (hi - lo));

        let failure: Cell<Option<Error>> = Cell::new(None);
        let weight = |tau: f64| -> f64 {
            match &self.kind {
                KernelKind::Fbm { hurst } => fbm_psi(*hurst, tau),
                KernelKind::Stationary { psi, .. } => {
                    let v = psi(tau.abs());
                    if abs_kernel {
                        v.abs()
                    } else {
                        v
                    }
                }
                KernelKind::General { .. } => 1.0,
            }
        };
        let integrand = |tau: f64| -> f64 {
            let u_lo = a.max(c + tau);
            let u_hi = b.min(d + tau);
            if u_hi <= u_lo {
                return 0.0;
            }
            match inner(tau, u_lo, u_hi) {
                // below the resolution of u - v a singular kernel reads as +∞
                Ok(v) if v == 0.0 => 0.0,
                Ok(v) => {
                    let x = weight(tau) * v;
                    if x.is_finite() {
                        x
                    } else {
                        0.0
                    }
                }
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += tanh_sinh(integrand, w[0], w[1], QUAD_TOL)?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
        }
        Ok(total)
    }

    fn rect_quadrature(&self, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
        self.rect_weighted(a, b, c, d, false, |_, _| 1.0)
    }

    /// `∫_a^b ∫_c^d w(u,v) φ(u,v) dv du` (or with `|φ|`) for `w` smooth on the rectangle.
    fn rect_weighted<W>(&self, a: f64, b: f64, c: f64, d: f64, abs_kernel: bool, w: W) -> Result<f64>
    where
        W: Fn(f64, f64) -> f64,
    {
        match &self.kind {
            KernelKind::General { phi } => self.rotated(a, b, c, d, abs_kernel, |tau, lo, hi| {
                adaptive_gauss(
                    |u| {
                        let v = phi(u, u - tau);
                        if !v.is_finite() {
                            return 0.0;
                        }
                        w(u, u - tau) * if abs_kernel { v.abs() } else { v }
                    },
                    lo,
                    hi,
                    QUAD_TOL,
                )
            }),
            _ => self.rotated(a, b, c, d, abs_kernel, |tau, lo, hi| {
                adaptive_gauss(|u| w(u, u - tau), lo, hi, QUAD_TOL)
            }),
        }
    }

    /// Matrix `[R(t_i, t_j)]` on the given nodes.
    pub fn covariance_matrix(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let n = nodes.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.covariance_r(nodes[i], nodes[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

fn fbm_psi(hurst: f64, tau: f64) -> f64 {
    hurst * (2.0 * hurst - 1.0) * tau.abs().powf(2.0 * hurst - 2.0)
}

fn fbm_r(hurst: f64, t: f64, s: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e))
}

/// Second difference of `R` over `[a,b]×[c,d]`, written without the
/// `t^{2H}` terms that cancel.
fn fbm_increment_cov(hurst: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let e = 2.0 * hurst;
    let pw = |x: f64| x.abs().powf(e);
    0.5 * (pw(b - c) + pw(a - d) - pw(b - d) - pw(a - c))
}

/// Deterministic integrands on `[0, T]` with values in `R^dim`.
#[derive(Clone)]
pub enum TimeFunction {
    /// Piecewise constant on `[breaks[i], breaks[i+1])`; the last cell is closed.
    Step {
        breaks: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    /// Component `i` is `Σ_j coeffs[i][j] t^j`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    Closure {
        dim: usize,
        f: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
    },
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFunction::Step { breaks, values } => f
                .debug_struct("Step")
                .field("breaks", breaks)
                .field("values", values)
                .finish(),
            TimeFunction::Polynomial { coeffs } => {
                f.debug_struct("Polynomial").field("coeffs", coeffs).finish()
            }
            TimeFunction::Closure { dim, .. } => write!(f, "Closure {{ dim: {dim} }}"),
        }
    }
}

impl TimeFunction {
    pub fn constant(value: Vec<f64>) -> Self {
        TimeFunction::Polynomial {
            coeffs: value.into_iter().map(|c| vec![c]).collect(),
        }
    }

    pub fn scalar_constant(c: f64) -> Self {
        Self::constant(vec![c])
    }

    /// Scalar `t^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        TimeFunction::Polynomial { coeffs: vec![c] }
    }

    /// Scalar indicator of `[a, b)` inside `[0, horizon]`.
    pub fn indicator(a: f64, b: f64, horizon: f64) -> Self {
        let mut breaks = vec![0.0];
        let mut values = Vec::new();
        if a > 0.0 {
            breaks.push(a);
            values.push(vec![0.0]);
        }
        breaks.push(b.min(horizon));
        values.push(vec![1.0]);
        if b < horizon {
            breaks.push(horizon);
            values.push(vec![0.0]);
        }
        TimeFunction::Step { breaks, values }
    }

    pub fn scalar_closure<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        TimeFunction::Closure {
            dim: 1,
            f: Arc::new(move |t, out: &mut [f64]| out[0] = f(t)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TimeFunction::Step { values, .. } => values.first().map_or(0, Vec::len),
            TimeFunction::Polynomial { coeffs } => coeffs.len(),
            TimeFunction::Closure { dim, .. } => *dim,
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            TimeFunction::Step { breaks, values } => {
                let last = breaks.len() - 1;
                if t < breaks[0] || t > breaks[last] {
                    out.iter_mut().for_each(|x| *x = 0.0);
                    return;
                }
                let idx = breaks.partition_point(|b| *b <= t).clamp(1, last) - 1;
                out.copy_from_slice(&values[idx]);
            }
            TimeFunction::Polynomial { coeffs } => {
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o = c.iter().rev().fold(0.0, |acc, a| acc * t + a);
                }
            }
            TimeFunction::Closure { f, .. } => f(t, out),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            TimeFunction::Step { breaks, .. } => breaks,
            _ => &[],
        }
    }

    /// Componentwise absolute value.
    pub fn abs(&self) -> Self {
        match self {
            TimeFunction::Step { breaks, values } => TimeFunction::Step {
                breaks: breaks.clone(),
                values: values
                    .iter()
                    .map(|v| v.iter().map(|x| x.abs()).collect())
                    .collect(),
            },
            other => {
                let inner = other.clone();
                TimeFunction::Closure {
                    dim: other.dim(),
                    f: Arc::new(move |t, out: &mut [f64]| {
                        inner.eval_into(t, out);
                        out.iter_mut().for_each(|x| *x = x.abs());
                    }),
                }
            }
        }
    }

    /// Scalar `L^p([0,T])` norm; only the first component is used.
    pub fn lp_norm(&self, p: f64, horizon: f64) -> Result<f64> {
        let integral = match self {
            TimeFunction::Step { breaks, values } => breaks
                .windows(2)
                .zip(values)
                .map(|(w, v)| (w[1].min(horizon) - w[0].max(0.0)).max(0.0) * v[0].abs().powf(p))
                .sum(),
            _ => adaptive_gauss(|t| self.eval(t)[0].abs().powf(p), 0.0, horizon, QUAD_TOL)?,
        };
        Ok(integral.powf(1.0 / p))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∫_0^T ∫_0^T ⟨f(s), h(s')⟩ φ(s,s') ds ds'`.
///
/// Step × step integrands reduce to cell-pair integrals of `φ` (exact second
/// differences of `R` for fBm). Otherwise `[0,T]` is cut at every step break
/// and each rectangle is integrated in rotated coordinates.
pub fn weighted_double_integral(
    k: &CovarianceKernel,
    f: &TimeFunction,
    h: &TimeFunction,
) -> Result<f64> {
    double_integral(k, f, h, false)
}

fn double_integral(
    k: &CovarianceKernel,
    f: &TimeFunction,
    h: &TimeFunction,
    abs_kernel: bool,
) -> Result<f64> {
    if f.dim() != h.dim() {
        return Err(Error::dims("weighted_double_integral", f.dim(), h.dim()));
    }
    let horizon = k.horizon();
    let cells = |tf: &TimeFunction| -> Vec<f64> {
        let mut b: Vec<f64> = tf
            .breakpoints()
            .iter()
            .copied()
            .filter(|x| *x > 0.0 && *x < horizon)
            .collect();
        b.insert(0, 0.0);
        b.push(horizon);
        b.dedup();
        b
    };
    let fb = cells(f);
    let hb = cells(h);
    let both_step = matches!(f, TimeFunction::Step { .. }) && matches!(h, TimeFunction::Step { .. });

    let dim = f.dim();
    let mut fu = vec![0.0; dim];
    let mut total = 0.0;
    for fw in fb.windows(2) {
        let (a, b) = (fw[0], fw[1]);
        for hw in hb.windows(2) {
            let (c, d) = (hw[0], hw[1]);
            if both_step {
                f.eval_into(0.5 * (a + b), &mut fu);
                let hv = h.eval(0.5 * (c + d));
                let ip = dot(&fu, &hv);
                if ip != 0.0 {
                    let cell = if abs_kernel {
                        k.rect_weighted(a, b, c, d, true, |_, _| 1.0)?
                    } else {
                        k.rect_integral(a, b, c, d)?
                    };
                    total += ip * cell;
                }
            } else {
                total += k.rect_weighted(a, b, c, d, abs_kernel, |u, v| {
                    let mut x = vec![0.0; dim];
                    let mut y = vec![0.0; dim];
                    f.eval_into(u, &mut x);
                    h.eval_into(v, &mut y);
                    dot(&x, &y)
                })?;
            }
        }
    }
    Ok(total)
}

/// Outcome of the empirical integrability harness.
#[derive(Debug, Clone, Serialize)]
pub struct CrReport {
    pub ratios: Vec<f64>,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Ratios `∫∫|f(u)f(v)φ(u,v)| du dv / ‖f‖²_{L^p}` over scalar test functions.
///
/// A sanity harness: finite ratios are necessary for the integrability bound
/// to hold, not a proof of it.
pub fn empirical_cr_check(k: &CovarianceKernel, test_functions: &[TimeFunction]) -> CrReport {
    let ratios: Vec<f64> = test_functions
        .iter()
        .map(|f| {
            let af = f.abs();
            let num = double_integral(k, &af, &af, true);
            let den = f.lp_norm(k.p(), k.horizon());
            match (num, den) {
                (Ok(n), Ok(d)) if d > 0.0 => n / d.powi(2),
                (Ok(n), Ok(_)) if n == 0.0 => 0.0,
                _ => f64::INFINITY,
            }
        })
        .collect();
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let pass = ratios.iter().all(|r| r.is_finite());
    CrReport {
        ratios,
        worst_ratio,
        pass,
    }
}

/// Smallest eigenvalue of `[R(t_i,t_j)]` relative to its largest diagonal entry.
pub fn min_eigen_ratio(k: &CovarianceKernel, nodes: &[f64]) -> Result<f64> {
    let m = k.covariance_matrix(nodes)?;
    let max_diag = m.diagonal().max();
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.min() / max_diag.max(f64::MIN_POSITIVE))
}
