use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes of the collocation grid per retained sine mode.
pub const COLLOCATION_FACTOR: usize = 4;

/// Which Gelfand triple the coefficient space carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TripleKind {
    /// `W^{1,p}_0 ⊂ L² ⊂ W^{-1,p'}` with finite-difference gradients.
    Sobolev { p: f64 },
    /// `L^q ⊂ H⁻¹ ⊂ (L^q)*`, the porous-medium triple.
    Lebesgue { q: f64 },
    /// `H¹_0 ⊂ L² ⊂ H⁻¹` with spectrally exact norms.
    Spectral,
}

/// Sine-mode Galerkin space on (0,1) with homogeneous Dirichlet conditions.
///
/// Coefficients `u_k` represent `Σ u_k √2 sin(kπx)`. Nonlinear maps are
/// evaluated on `M = 4n` interior nodes `x_j = j/(M+1)`; with spacing
/// `h = 1/(M+1)` the pair (synthesis `S`, analysis `h·Sᵀ`) is exactly
/// orthonormal.
#[derive(Debug, Clone)]
pub struct GalerkinSpace {
    n: usize,
    kind: TripleKind,
    spacing: f64,
    synth: DMatrix<f64>,
    eigen: Vec<f64>,
    // ‖u‖_V = (weight · Σ |(G u)_i|^q)^{1/q}
    grad: DMatrix<f64>,
    weight: f64,
    exponent: f64,
    // H-inner product weights per coefficient
    omega: Vec<f64>,
    kappa: f64,
}

impl GalerkinSpace {
    fn build(n: usize, kind: TripleKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("Galerkin dimension must be at least 1".into()));
        }
        let m = COLLOCATION_FACTOR * n;
        let spacing = 1.0 / (m + 1) as f64;
        let synth = DMatrix::from_fn(m, n, |j, k| {
            2f64.sqrt() * (PI * (k + 1) as f64 * (j + 1) as f64 * spacing).sin()
        });
        let eigen: Vec<f64> = (1..=n).map(|k| (PI * k as f64).powi(2)).collect();
        // smallest eigenvalue of the Dirichlet difference Laplacian
        let mu1 = 4.0 / (spacing * spacing) * (PI * spacing / 2.0).sin().powi(2);
        let (grad, weight, exponent, omega, kappa) = match kind {
            TripleKind::Sobolev { p } => {
                if !(p >= 2.0 && p.is_finite()) {
                    return Err(Error::Domain(format!("Sobolev exponent p = {p} must be ≥ 2")));
                }
                let diff = DMatrix::from_fn(m + 1, m, |e, j| {
                    if j == e {
                        1.0 / spacing
                    } else if j + 1 == e {
                        -1.0 / spacing
                    } else {
                        0.0
                    }
                });
                (diff * &synth, spacing, p, vec![1.0; n], 1.0 / mu1.sqrt())
            }
            TripleKind::Lebesgue { q } => {
                if !(q >= 2.0 && q.is_finite()) {
                    return Err(Error::Domain(format!("Lebesgue exponent q = {q} must be ≥ 2")));
                }
                let omega = eigen.iter().map(|l| 1.0 / l).collect();
                (synth.clone(), spacing, q, omega, 1.0 / PI)
            }
            TripleKind::Spectral => {
                let grad = DMatrix::from_diagonal(&DVector::from_iterator(n, eigen.iter().map(|l| l.sqrt())));
                (grad, 1.0, 2.0, vec![1.0; n], 1.0 / PI)
            }
        };
        Ok(Self {
            n,
            kind,
            spacing,
            synth,
            eigen,
            grad,
            weight,
            exponent,
            omega,
            kappa,
        })
    }

    /// `V = W^{1,p}_0`, `H = L²`.
    pub fn sobolev(n: usize, p: f64) -> Result<Self> {
        Self::build(n, TripleKind::Sobolev { p })
    }

    /// `V = L^{m+1}`, `H = H⁻¹`.
    pub fn porous(n: usize, m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::Domain(format!("porous-medium exponent m = {m} must be ≥ 1")));
        }
        Self::build(n, TripleKind::Lebesgue { q: m + 1.0 })
    }

    /// `V = H¹_0`, `H = L²`, all norms diagonal in the sine basis.
    pub fn spectral(n: usize) -> Result<Self> {
        Self::build(n, TripleKind::Spectral)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> TripleKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.exponent
    }

    /// Embedding constant: `‖u‖_H ≤ κ ‖u‖_V`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn collocation_spacing(&self) -> f64 {
        self.spacing
    }

    pub fn collocation_len(&self) -> usize {
        self.synth.nrows()
    }

    /// Dirichlet eigenvalues `(πk)²`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen
    }

    pub fn h_weights(&self) -> &[f64] {
        &self.omega
    }

    pub fn synthesis(&self) -> &DMatrix<f64> {
        &self.synth
    }

    /// Linear map whose weighted `ℓ^q` norm is the V-norm.
    pub fn gradient_map(&self) -> &DMatrix<f64> {
        &self.grad
    }

    pub fn norm_weight(&self) -> f64 {
        self.weight
    }

    /// Nodal values `S u`.
    pub fn synthesize(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.synth * u
    }

    /// Coefficients `h Sᵀ f` of nodal data.
    pub fn analyze(&self, f: &DVector<f64>) -> DVector<f64> {
        self.synth.tr_mul(f) * self.spacing
    }

    pub fn h_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.omega.iter().zip(u.iter().zip(v.iter())).map(|(w, (a, b))| w * a * b).sum()
    }

    pub fn h_norm(&self, u: &DVector<f64>) -> f64 {
        self.h_inner(u, u).sqrt()
    }

    pub fn v_norm(&self, u: &DVector<f64>) -> f64 {
        let q = self.exponent;
        let s: f64 = (&self.grad * u).iter().map(|x| x.abs().powf(q)).sum();
        (self.weight * s).powf(1.0 / q)
    }

    /// Duality pairing `⟨F, v⟩`, the H-inner product extended to `V*`.
    pub fn pairing(&self, f: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.h_inner(f, v)
    }

    /// `‖F‖_{V*} = sup ⟨F, z⟩ / ‖z‖_V`.
    ///
    /// The supremum is attained at the minimiser `z*` of the convex energy
    /// `(w/q) Σ|Gz|^q − ⟨F, z⟩`, where `‖F‖_{V*} = ‖z*‖_V^{q−1}`. The energy
    /// is minimised by Newton's method with Armijo backtracking.
    pub fn dual_norm(&self, f: &DVector<f64>) -> f64 {
        let rhs = DVector::from_iterator(self.n, self.omega.iter().zip(f.iter()).map(|(w, x)| w * x));
        if rhs.iter().all(|x| *x == 0.0) {
            return 0.0;
        }
        let (g, w, q) = (&self.grad, self.weight, self.exponent);
        let gram = g.tr_mul(g) * w;
        let chol = gram.clone().cholesky().expect("V-norm gradient map has full column rank");
        let z2 = chol.solve(&rhs);
        if q == 2.0 {
            return rhs.dot(&z2).sqrt();
        }
        // best multiple of the quadratic solution as the starting point
        let pow: f64 = (g * &z2).iter().map(|x| x.abs().powf(q)).sum();
        let fz = rhs.dot(&z2);
        let mut z = z2 * (fz / (w * pow)).powf(1.0 / (q - 1.0));
        let energy = |z: &DVector<f64>| {
            let s: f64 = (g * z).iter().map(|x| x.abs().powf(q)).sum();
            w / q * s - rhs.dot(z)
        };
        let mut e = energy(&z);
        for _ in 0..100 {
            let gz = g * &z;
            let beta = gz.map(|x| x.abs().powf(q - 2.0) * x);
            let grad = g.tr_mul(&beta) * w - &rhs;
            if grad.norm() <= 1e-14 * rhs.norm() {
                break;
            }
            let d2 = gz.map(|x| (q - 1.0) * x.abs().powf(q - 2.0));
            let mut hess = g.tr_mul(&DMatrix::from_diagonal(&d2)) * g * w;
            // keep the Newton system definite where Gz vanishes
            let floor = 1e-14 * hess.diagonal().max().max(f64::MIN_POSITIVE);
            for i in 0..self.n {
                hess[(i, i)] += floor;
            }
            let step = match hess.cholesky() {
                Some(c) => -c.solve(&grad),
                None => -chol.solve(&grad),
            };
            let slope = grad.dot(&step);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let cand = &z + &step * t;
                let ec = energy(&cand);
                if ec <= e + 1e-4 * t * slope {
                    z = cand;
                    e = ec;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.v_norm(&z).powf(q - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_inverts_synthesis() {
        let s = GalerkinSpace::sobolev(6, 2.0).unwrap();
        let u = DVector::from_fn(6, |i, _| (i as f64 + 1.0).recip());
        let back = s.analyze(&s.synthesize(&u));
        assert!((back - u).amax() < 1e-13);
    }

    #[test]
    fn embedding_holds_on_basis_vectors() {
        for s in [
            GalerkinSpace::sobolev(8, 2.0).unwrap(),
            GalerkinSpace::sobolev(8, 4.0).unwrap(),
            GalerkinSpace::porous(8, 3.0).unwrap(),
            GalerkinSpace::spectral(8).unwrap(),
        ] {
            for k in 0..8 {
                let mut e = DVector::zeros(8);
                e[k] = 1.0;
                assert!(s.h_norm(&e) <= s.kappa() * s.v_norm(&e) * (1.0 + 1e-12), "{:?} mode {k}", s.kind());
            }
        }
    }

    #[test]
    fn dual_norm_of_quadratic_space_is_closed_form() {
        let s = GalerkinSpace::spectral(5).unwrap();
        let f = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 3.0]);
        let exact: f64 = f.iter().zip(s.eigenvalues()).map(|(x, l)| x * x / l).sum::<f64>().sqrt();
        assert!((s.dual_norm(&f) - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn dual_norm_in_one_dimension() {
        for s in [GalerkinSpace::sobolev(1, 3.0).unwrap(), GalerkinSpace::porous(1, 3.0).unwrap()] {
            let f = DVector::from_vec(vec![-2.5]);
            let e = DVector::from_vec(vec![1.0]);
            let exact = s.pairing(&f, &e).abs() / s.v_norm(&e);
            assert!((s.dual_norm(&f) - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn dual_norm_dominates_pairings() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::rng::StreamFamily::new(3, crate::rng::Domain::Harness).stream(0);
        for s in [GalerkinSpace::sobolev(6, 4.0).unwrap(), GalerkinSpace::porous(6, 3.0).unwrap()] {
            let f = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let d = s.dual_norm(&f);
            for _ in 0..200 {
                let v = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
                assert!(s.pairing(&f, &v).abs() <= d * s.v_norm(&v) * (1.0 + 1e-9));
            }
        }
    }
}
