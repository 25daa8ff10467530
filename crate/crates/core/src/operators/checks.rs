use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::par::{self, ExecMode};
use crate::rng::{Domain, StreamFamily};
use crate::stats::fit_slope;

use super::diffusion::DiffusionOperator;
use super::drift::{DeclaredConstants, DriftOperator};

/// Sample amplitudes, cycled over the sample index.
pub const AMPLITUDES: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];
/// Relative slack on inequality margins.
pub const MARGIN_TOL: f64 = 1e-8;
/// Required contraction of the largest jump per halving of the λ-step.
pub const H1_RATIO: f64 = 0.6;
/// Allowed deviation of the growth slope from `α − 1`.
pub const SLOPE_TOL: f64 = 0.1;

const H1_LEVELS: [usize; 6] = [32, 64, 128, 256, 512, 1024];

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| amp * rng.sample::<f64, _>(StandardNormal))
}

fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    StreamFamily::new(seed, Domain::Harness).stream(i as u64)
}

/// Constants of the pair `(A, B)`: the drift's own, widened by the declared
/// Lipschitz and offset bounds of `B`.
pub fn pair_constants(a: &DriftOperator, b: &DiffusionOperator) -> DeclaredConstants {
    let mut k = *a.constants();
    let (l2, b0) = (b.lipschitz_sq(), b.offset_sq());
    k.c += l2;
    // ‖B(v)‖² ≤ (1+ε)L²‖v‖² + (1+1/ε)‖B(0)‖², with ε = 1 unless one term vanishes
    let (cl, cb) = match (l2 > 0.0, b0 > 0.0) {
        (true, true) => (2.0, 2.0),
        _ => (1.0, 1.0),
    };
    k.c1 += cl * l2;
    k.f += cb * b0;
    k
}

#[derive(Debug, Clone, Serialize)]
pub struct H1Report {
    pub samples: usize,
    /// Worst jump ratio for each refinement of the λ-grid.
    pub ratios: Vec<f64>,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Hemicontinuity: `λ ↦ ⟨A(u + λv), x⟩` on nested grids of `[−1, 1]`.
pub fn check_h1(a: &DriftOperator, n_samples: usize, seed: u64) -> H1Report {
    let space = a.space().clone();
    let n = space.dim();
    let finest = *H1_LEVELS.last().unwrap();
    let per_sample: Vec<Vec<f64>> = par::map_indexed(n_samples, ExecMode::default(), |i| {
        let mut rng = sample_rng(seed, i);
        let amp = AMPLITUDES[i % AMPLITUDES.len()];
        let (u, v, x) = (
            gaussian_vector(&mut rng, n, amp),
            gaussian_vector(&mut rng, n, amp),
            gaussian_vector(&mut rng, n, 1.0),
        );
        let phi: Vec<f64> = (0..=finest)
            .map(|j| {
                let lam = -1.0 + 2.0 * j as f64 / finest as f64;
                space.pairing(&a.eval(0.0, &(&u + &v * lam)), &x)
            })
            .collect();
        let size = phi.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        let jumps: Vec<f64> = H1_LEVELS
            .iter()
            .map(|&cells| {
                let stride = finest / cells;
                phi.iter()
                    .step_by(stride)
                    .collect::<Vec<_>>()
                    .windows(2)
                    .map(|w| (w[1] - w[0]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        jumps
            .windows(2)
            .map(|w| {
                // a constant map has no jumps to shrink
                if w[0] <= 1e-13 * size || w[0] == 0.0 {
                    0.0
                } else {
                    w[1] / w[0]
                }
            })
            .collect()
    });
    let mut ratios = vec![0.0f64; H1_LEVELS.len() - 1];
    for r in &per_sample {
        for (acc, x) in ratios.iter_mut().zip(r) {
            *acc = acc.max(*x);
        }
    }
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    H1Report {
        samples: n_samples,
        ratios,
        worst_ratio,
        pass: worst_ratio < H1_RATIO,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct H2Report {
    pub samples: usize,
    pub declared_c: f64,
    /// Largest observed `(2⟨A(u)−A(v),u−v⟩ + ‖B(u)−B(v)‖²) / ‖u−v‖²_H`.
    pub worst_c: f64,
    /// Largest margin divided by the size of the terms involved.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Weak monotonicity against the declared pair constant `c`.
pub fn check_h2(a: &DriftOperator, b: &DiffusionOperator, n_samples: usize, seed: u64) -> H2Report {
    let space = a.space().clone();
    let n = space.dim();
    let c = pair_constants(a, b).c;
    let rows: Vec<(f64, f64, bool)> = par::map_indexed(n_samples, ExecMode::default(), |i| {
        let mut rng = sample_rng(seed, i);
        let amp = AMPLITUDES[i % AMPLITUDES.len()];
        let u = gaussian_vector(&mut rng, n, amp);
        let v = gaussian_vector(&mut rng, n, amp);
        let d = &u - &v;
        let mono = 2.0 * space.pairing(&(a.eval(0.0, &u) - a.eval(0.0, &v)), &d);
        let hs = b.hs_norm_sq(&(b.eval(0.0, &u) - b.eval(0.0, &v)));
        let dn = space.h_inner(&d, &d);
        let margin = mono + hs - c * dn;
        let scale = mono.abs() + hs + c.abs() * dn;
        let ok = margin <= MARGIN_TOL * scale + f64::MIN_POSITIVE;
        let rel = if scale > 0.0 { margin / scale } else { 0.0 };
        ((mono + hs) / dn, rel, ok)
    });
    H2Report {
        samples: n_samples,
        declared_c: c,
        worst_c: rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
        worst_margin: rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
        pass: rows.iter().all(|r| r.2),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct H3Report {
    pub samples: usize,
    pub constants: DeclaredConstants,
    pub worst_margin: f64,
    pub pass: bool,
}

/// Coercivity: `2⟨A(v),v⟩ + ‖B(v)‖² ≤ c1‖v‖²_H − c2‖v‖_V^α + f`.
pub fn check_h3(a: &DriftOperator, b: &DiffusionOperator, n_samples: usize, seed: u64) -> H3Report {
    let space = a.space().clone();
    let n = space.dim();
    let k = pair_constants(a, b);
    let rows: Vec<(f64, bool)> = par::map_indexed(n_samples, ExecMode::default(), |i| {
        let mut rng = sample_rng(seed, i);
        let amp = AMPLITUDES[i % AMPLITUDES.len()];
        let v = gaussian_vector(&mut rng, n, amp);
        let lhs_a = 2.0 * space.pairing(&a.eval(0.0, &v), &v);
        let hs = b.hs_norm_sq(&b.eval(0.0, &v));
        let h2 = space.h_inner(&v, &v);
        let va = space.v_norm(&v).powf(k.alpha);
        let margin = lhs_a + hs - (k.c1 * h2 - k.c2 * va + k.f);
        let scale = lhs_a.abs() + hs + k.c1.abs() * h2 + k.c2.abs() * va + k.f.abs();
        let rel = if scale > 0.0 { margin / scale } else { 0.0 };
        (rel, margin <= MARGIN_TOL * scale + f64::MIN_POSITIVE)
    });
    H3Report {
        samples: n_samples,
        constants: k,
        worst_margin: rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
        pass: rows.iter().all(|r| r.1),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct H4Report {
    pub samples: usize,
    pub worst_margin: f64,
    pub bound_holds: bool,
    /// Mean fitted slope of `log ‖A(v)‖_{V*}` against `log ‖v‖_V`; absent for
    /// an identically vanishing drift.
    pub slope: Option<f64>,
    pub expected_slope: f64,
    pub worst_slope_deviation: f64,
    pub pass: bool,
}

/// Growth bound `‖A(v)‖_{V*} ≤ g + c3‖v‖_V^{α−1}`, plus a log-log slope fit
/// along a few random directions.
pub fn check_h4(a: &DriftOperator, n_samples: usize, seed: u64) -> H4Report {
    let space = a.space().clone();
    let n = space.dim();
    let k = *a.constants();
    let rows: Vec<(f64, bool)> = par::map_indexed(n_samples, ExecMode::default(), |i| {
        let mut rng = sample_rng(seed, i);
        let amp = AMPLITUDES[i % AMPLITUDES.len()];
        let v = gaussian_vector(&mut rng, n, amp);
        let lhs = space.dual_norm(&a.eval(0.0, &v));
        let rhs = k.g + k.c3 * space.v_norm(&v).powf(k.alpha - 1.0);
        let scale = lhs + rhs.abs();
        let rel = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
        (rel, lhs - rhs <= MARGIN_TOL * scale + f64::MIN_POSITIVE)
    });
    let expected = k.alpha - 1.0;
    let directions = n_samples.clamp(1, 8);
    let slopes: Vec<Option<f64>> = par::map_indexed(directions, ExecMode::default(), |i| {
        let mut rng = sample_rng(seed ^ 0x5eed_5107e, i);
        let dir = gaussian_vector(&mut rng, n, 1.0);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for j in 0..9 {
            let v = &dir * 10f64.powf(-2.0 + 0.5 * j as f64);
            let d = space.dual_norm(&a.eval(0.0, &v));
            if d > 0.0 {
                xs.push(space.v_norm(&v).ln());
                ys.push(d.ln());
            }
        }
        (xs.len() >= 2).then(|| fit_slope(&xs, &ys))
    });
    let fitted: Vec<f64> = slopes.into_iter().flatten().collect();
    let slope = (!fitted.is_empty()).then(|| fitted.iter().sum::<f64>() / fitted.len() as f64);
    let worst_dev = fitted.iter().map(|s| (s - expected).abs()).fold(0.0, f64::max);
    let bound_holds = rows.iter().all(|r| r.1);
    H4Report {
        samples: n_samples,
        worst_margin: rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
        bound_holds,
        slope,
        expected_slope: expected,
        worst_slope_deviation: worst_dev,
        pass: bound_holds && worst_dev <= SLOPE_TOL,
    }
}
