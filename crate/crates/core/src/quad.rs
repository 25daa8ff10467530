//! One-dimensional quadrature: double-exponential (tanh-sinh) for integrands
//! with algebraic endpoint singularities, and adaptive Gauss–Legendre for
//! smooth ones.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const TS_MAX_LEVEL: u32 = 12;
const TS_MIN_LEVEL: u32 = 3;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// Abscissae are generated as offsets from the nearer endpoint, so an
/// integrand singular at `a` or `b` is only ever sampled strictly inside the
/// interval. Converges when successive levels differ by at most `tol` times
/// the integral of `|f|`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b == a {
        return Ok(0.0);
    }
    if b < a {
        return tanh_sinh(f, b, a, tol).map(|v| -v);
    }
    let width = b - a;
    let half = 0.5 * width;

    // (weight, f(left), f(right)) pairs summed at spacing `h` over t >= 0
    let level_sum = |h: f64, odd_only: bool| -> (f64, f64) {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut j: u64 = if odd_only { 1 } else { 0 };
        let stride = if odd_only { 2 } else { 1 };
        loop {
            let t = j as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let eps = (-2.0 * u).exp();
            if eps < f64::MIN_POSITIVE {
                break;
            }
            let w = 2.0 * PI * t.cosh() * eps / ((1.0 + eps) * (1.0 + eps));
            let offset = width * eps / (1.0 + eps);
            if j == 0 {
                let v = f(a + half);
                sum += w * v;
                abs_sum += w * v.abs();
            } else if offset > 0.0 {
                for v in [f(a + offset), f(b - offset)] {
                    if v.is_finite() {
                        sum += w * v;
                        abs_sum += w * v.abs();
                    }
                }
            }
            j += stride;
        }
        (sum, abs_sum)
    };

    let mut h = 1.0;
    let (mut sum, mut abs_sum) = level_sum(h, false);
    let mut estimate = half * h * sum;
    let mut error = f64::INFINITY;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        let (s, a_s) = level_sum(h, true);
        sum += s;
        abs_sum += a_s;
        let next = half * h * sum;
        error = (next - estimate).abs();
        estimate = next;
        let scale = half * h * abs_sum;
        if level >= TS_MIN_LEVEL && error <= tol * scale + f64::MIN_POSITIVE {
            return Ok(estimate);
        }
    }
    Err(Error::Quadrature {
        lo: a,
        hi: b,
        tol,
        estimate,
        error,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12))
}

/// Fixed 12-point Gauss–Legendre on `[a, b]`.
pub fn gauss_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl_rule();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    r * x
        .iter()
        .zip(w)
        .map(|(xi, wi)| wi * f((c + r * xi).clamp(a, b)))
        .sum::<f64>()
}

/// Adaptive bisection with 12-point Gauss–Legendre panels.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, (f64, f64)> {
        let m = 0.5 * (a + b);
        let left = gauss_panel(f, a, m);
        let right = gauss_panel(f, m, b);
        let err = (left + right - whole).abs();
        if err <= tol || depth == 0 {
            if err <= tol {
                return Ok(left + right);
            }
            return Err((left + right, err));
        }
        let l = recurse(f, a, m, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = gauss_panel(&f, a, b);
    let abs_scale = gauss_panel(&|x| f(x).abs(), a, b).abs();
    let abs_tol = tol * abs_scale.max(f64::MIN_POSITIVE);
    recurse(&f, a, b, whole, abs_tol, 40).map_err(|(estimate, error)| Error::Quadrature {
        lo: a,
        hi: b,
        tol,
        estimate,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        for deg in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-0.8} dx = 5
        let v = tanh_sinh(|x| x.powf(-0.8), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 5.0).abs() < 1e-9, "{v}");
        // singular at the right end: ∫_{-1}^0 |x|^{-1/2} dx = 2
        let v = tanh_sinh(|x: f64| x.abs().powf(-0.5), -1.0, 0.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let v = tanh_sinh(|x: f64| x.exp(), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(tanh_sinh(|_| 0.0, 0.0, 1.0, 1e-12).unwrap(), 0.0);
        let v = tanh_sinh(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gauss_smooth_and_kinked() {
        let v = adaptive_gauss(|x: f64| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive_gauss(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }
}
