use std::f64::consts::PI;
use std::sync::Arc;

use gspde::gaussian::{NoiseSpec, OperatorValuedIntegrand};
use gspde::kernel::make_fbm_kernel;
use gspde::operators::*;
use gspde::par::ExecMode;
use gspde::solver::*;
use gspde::stats::MeanEstimate;
use nalgebra::{DMatrix, DVector};

fn heat_problem(n: usize, b: Option<DMatrix<f64>>, h: Option<OperatorValuedIntegrand>) -> Problem {
    let space = Arc::new(GalerkinSpace::spectral(n).unwrap());
    let drift = make_linear_heat(space.clone()).unwrap();
    let diffusion = match b {
        Some(m) => DiffusionOperator::constant(space.h_weights(), m).unwrap(),
        None => DiffusionOperator::zero(space.h_weights(), 1),
    };
    Problem {
        drift,
        diffusion,
        h: h.unwrap_or_else(|| OperatorValuedIntegrand::zero(n, 1)),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::explicit(vec![1.0]).unwrap(),
    }
}

fn first_mode(n: usize) -> InitialState {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    InitialState::Deterministic { coeffs: v }
}

#[test]
fn heat_mode_follows_backward_euler_recursion() {
    let p = heat_problem(4, None, None);
    let cfg = SolverConfig::new(1.0 / 512.0, 1.0, 1, 2);
    let sol = solve_spde(&p, &first_mode(4), &cfg).unwrap();
    let amp = 1.0 / (1.0 + cfg.dt * PI * PI);
    for k in [1, 100, 512] {
        let exact = amp.powi(k as i32);
        assert!(((sol.x(k)[0] - exact) / exact).abs() < 1e-12);
        assert_eq!(sol.x(k)[1], 0.0);
    }
}

#[test]
fn zero_operators_keep_the_state() {
    let space = Arc::new(GalerkinSpace::spectral(3).unwrap());
    let p = Problem {
        drift: DriftOperator::zero(space.clone()),
        diffusion: DiffusionOperator::zero(space.h_weights(), 1),
        h: OperatorValuedIntegrand::zero(3, 1),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::explicit(vec![1.0]).unwrap(),
    };
    let x0 = InitialState::Deterministic { coeffs: vec![0.5, -1.0, 2.0] };
    let sol = solve_spde(&p, &x0, &SolverConfig::new(0.125, 1.0, 0, 0)).unwrap();
    for k in 0..sol.grid().len() {
        assert_eq!(sol.x(k).iter().copied().collect::<Vec<_>>(), vec![0.5, -1.0, 2.0]);
    }
    let m = estimate_moments(std::slice::from_ref(&sol), &space).unwrap();
    let h2 = 0.25 + 1.0 + 4.0;
    assert!((m.sup_t_mean_h2 - h2).abs() < 1e-14);
    let v2: f64 = [0.5f64, -1.0, 2.0].iter().zip(space.eigenvalues()).map(|(x, l)| l * x * x).sum();
    assert!((m.mean_v_alpha - v2).abs() < 1e-12 * v2);
}

#[test]
fn heat_second_moment_peaks_at_start() {
    let p = heat_problem(3, None, None);
    let x0 = InitialState::Deterministic { coeffs: vec![1.0, 0.5, 0.25] };
    let sol = solve_spde(&p, &x0, &SolverConfig::new(1.0 / 64.0, 1.0, 0, 0)).unwrap();
    let m = estimate_moments(&[sol], p.drift.space()).unwrap();
    assert_eq!(m.sup_node, 0);
}

/// `κ` in `A(u) = −κu³` for the one-mode 4-Laplacian, straight from the
/// difference quotients of `√2 sin(πx)`.
fn one_mode_p4_coefficient(space: &GalerkinSpace) -> f64 {
    let h = space.collocation_spacing();
    (0..=space.collocation_len())
        .map(|e| {
            let (x0, x1) = (e as f64 * h, (e + 1) as f64 * h);
            h * (2f64.sqrt() * ((PI * x1).sin() - (PI * x0).sin()) / h).powi(4)
        })
        .sum()
}

#[test]
fn p4_implicit_solve_is_unique() {
    let space = Arc::new(GalerkinSpace::sobolev(1, 4.0).unwrap());
    let a = make_p_laplace(space.clone(), 4.0).unwrap();
    let b = DiffusionOperator::zero(space.h_weights(), 1);
    let y0 = DVector::from_vec(vec![1.3]);
    let mut cfg = SolverConfig::new(0.05, 0.5, 0, 0);
    let (prev, _) = solve_transformed(&a, &b, &y0, &cfg, &[]).unwrap();
    cfg.inner_init = InnerInit::Zero;
    let (zero, _) = solve_transformed(&a, &b, &y0, &cfg, &[]).unwrap();
    let kappa = one_mode_p4_coefficient(&space);
    let mut y: f64 = 1.3;
    for k in 1..prev.len() {
        assert!((prev[k][0] - zero[k][0]).abs() <= 10.0 * cfg.inner_tol);
        // bisection oracle for y_{k+1} + dt κ y_{k+1}³ = y_k
        let (mut lo, mut hi): (f64, f64) = (0.0, y);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + cfg.dt * kappa * mid.powi(3) > y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        y = 0.5 * (lo + hi);
        assert!((prev[k][0] - y).abs() < 1e-9, "step {k}: {} vs {y}", prev[k][0]);
    }
}

#[test]
fn fixed_point_and_newton_agree() {
    let space = Arc::new(GalerkinSpace::porous(4, 3.0).unwrap());
    let a = make_porous_medium(space.clone(), 3.0).unwrap();
    let b = DiffusionOperator::zero(space.h_weights(), 1);
    let y0 = DVector::from_vec(vec![0.4, -0.2, 0.1, 0.05]);
    let mut cfg = SolverConfig::new(1e-3, 0.01, 0, 0);
    let (newton, d1) = solve_transformed(&a, &b, &y0, &cfg, &[]).unwrap();
    cfg.inner_method = InnerMethod::FixedPoint;
    let (fixed, d2) = solve_transformed(&a, &b, &y0, &cfg, &[]).unwrap();
    let space = a.space();
    for (u, v) in newton.iter().zip(&fixed) {
        assert!(space.h_norm(&(u - v)) < 1e-9);
    }
    assert!(d1.iter().chain(&d2).all(|d| d.residual <= cfg.inner_tol));
}

#[test]
fn inner_failure_reports_step() {
    let space = Arc::new(GalerkinSpace::sobolev(6, 4.0).unwrap());
    let a = make_p_laplace(space.clone(), 4.0).unwrap();
    let b = DiffusionOperator::zero(space.h_weights(), 1);
    let mut cfg = SolverConfig::new(0.1, 0.2, 0, 0);
    cfg.inner_method = InnerMethod::FixedPoint;
    cfg.inner_max_iter = 3;
    let y0 = DVector::from_element(6, 5.0);
    match solve_transformed(&a, &b, &y0, &cfg, &[]) {
        Err(gspde::Error::InnerSolve { step, iterations, .. }) => {
            assert_eq!(step, 0);
            assert_eq!(iterations, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn large_step_violates_contraction() {
    let space = Arc::new(GalerkinSpace::spectral(2).unwrap());
    let k = DeclaredConstants {
        c: 8.0,
        c1: 8.0,
        ..DeclaredConstants::zero(2.0)
    };
    let a = DriftOperator::diagonal(space.clone(), vec![4.0, 4.0], k).unwrap();
    let b = DiffusionOperator::zero(space.h_weights(), 1);
    let cfg = SolverConfig::new(0.125, 1.0, 0, 0);
    assert!(matches!(
        solve_transformed(&a, &b, &DVector::zeros(2), &cfg, &[]),
        Err(gspde::Error::Contract(_))
    ));
    let cfg = SolverConfig::new(0.0625, 1.0, 0, 0);
    assert!(solve_transformed(&a, &b, &DVector::zeros(2), &cfg, &[]).is_ok());
}

#[test]
fn zero_integrand_matches_direct_transformed_solve() {
    let b = DMatrix::from_row_slice(3, 2, &[0.3, 0.0, 0.0, 0.2, 0.1, 0.1]);
    let p = heat_problem(3, Some(b), None);
    let cfg = SolverConfig::new(1.0 / 32.0, 1.0, 11, 12);
    let x0 = InitialState::Deterministic { coeffs: vec![1.0, 0.0, -1.0] };
    let sol = solve_spde(&p, &x0, &cfg).unwrap();
    let dw = wiener_increments(11, 0, 32, 2, cfg.dt);
    let (ys, _) = solve_transformed(&p.drift, &p.diffusion, &x0.draw(0), &cfg, &dw).unwrap();
    for (k, y) in ys.iter().enumerate() {
        assert_eq!(sol.x(k).into_owned(), *y);
        assert!(sol.w(k).iter().all(|x| *x == 0.0));
    }
}

#[test]
fn decomposition_and_determinism() {
    let h = OperatorValuedIntegrand::mode_projection(3, 1, &[0]).unwrap();
    let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 0.0]);
    let p = heat_problem(3, Some(b), Some(h));
    let cfg = SolverConfig::new(1.0 / 64.0, 1.0, 5, 6);
    let x0 = InitialState::Gaussian {
        mean: vec![0.0; 3],
        std: vec![1.0, 0.5, 0.25],
        seed: 9,
    };
    let sim = Simulation::new(&p, cfg).unwrap();
    let seq = sim.ensemble(&x0, 6, ExecMode::Sequential).unwrap();
    let par = sim.ensemble(&x0, 6, ExecMode::Parallel).unwrap();
    assert_eq!(seq, par);
    for run in &seq {
        for k in 0..run.grid().len() {
            let y = run.y(k);
            let w = run.w(k);
            for i in 0..3 {
                assert_eq!(run.x(k)[i], y[i] + w[i]);
            }
        }
        assert_eq!(run.x(0).into_owned(), x0.draw(run.run()));
        assert!(run.diagnostics().iter().all(|d| d.residual <= 1e-10));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    seq[3].write_csv(&["run 3".into()], &mut a).unwrap();
    par[3].write_csv(&["run 3".into()], &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn contraction_of_differences_for_monotone_drift() {
    let space = Arc::new(GalerkinSpace::sobolev(4, 4.0).unwrap());
    let drift = make_p_laplace(space.clone(), 4.0).unwrap();
    let p = Problem {
        diffusion: DiffusionOperator::constant(space.h_weights(), DMatrix::from_element(4, 2, 0.2)).unwrap(),
        drift,
        h: OperatorValuedIntegrand::mode_projection(4, 2, &[0, 1]).unwrap(),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::power_law(1.0, 3.0, 2).unwrap(),
    };
    let sim = Simulation::new(&p, SolverConfig::new(1.0 / 32.0, 0.5, 3, 4)).unwrap();
    let a = sim.run(&InitialState::Deterministic { coeffs: vec![1.0, 0.0, 0.3, 0.0] }, 0).unwrap();
    let b = sim.run(&InitialState::Deterministic { coeffs: vec![-0.5, 0.2, 0.0, 0.1] }, 0).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..a.grid().len() {
        let d = space.h_norm(&(a.x(k) - b.x(k)));
        assert!(d <= prev * (1.0 + 1e-8));
        prev = d;
    }
}

#[test]
fn wiener_and_gaussian_contributions_add() {
    let lam = PI * PI;
    let sigma = 0.8;
    let h = OperatorValuedIntegrand::mode_projection(2, 1, &[0]).unwrap();
    let p = heat_problem(2, Some(DMatrix::from_row_slice(2, 1, &[sigma, 0.0])), Some(h));
    let dt = 1.0 / 64.0;
    let sim = Simulation::new(&p, SolverConfig::new(dt, 1.0, 101, 202)).unwrap();
    let runs = sim.ensemble(&InitialState::zero(2), 2000, ExecMode::default()).unwrap();
    let finals: Vec<f64> = runs.iter().map(|r| r.final_x()[0].powi(2)).collect();
    let est = MeanEstimate::from_samples(&finals);
    // X_{k+1} = (X_k + σΔW_k + Δg_k)/(1 + dtλ): per-part oracles
    let m: usize = 64;
    let q = 1.0 / (1.0 + dt * lam);
    let wiener: f64 = (1..=m).map(|j| sigma * sigma * dt * q.powi(2 * j as i32)).sum();
    let k = make_fbm_kernel(0.75).unwrap();
    let t = |i: usize| i as f64 * dt;
    let mut gauss = 0.0;
    for i in 0..m {
        for j in 0..m {
            let cov = k.rect_integral(t(i), t(i + 1), t(j), t(j + 1)).unwrap();
            gauss += q.powi((m - i) as i32) * q.powi((m - j) as i32) * cov;
        }
    }
    assert!(est.agrees_with(wiener + gauss, 3.0), "{est:?} vs {}", wiener + gauss);
}

#[test]
fn heat_rate_is_first_order() {
    let p = heat_problem(4, None, None);
    let dts: Vec<f64> = (4..=9).map(|j| 2f64.powi(-j)).collect();
    let base = SolverConfig::new(dts[0], 0.25, 0, 0);
    let table = convergence_study(&p, &first_mode(4), &base, &dts, 1, ExecMode::default()).unwrap();
    let s = table.slope.unwrap();
    assert!((s - 1.0).abs() <= 0.1, "{table:?}");
}

#[test]
fn additive_noise_without_drift_is_exact() {
    let space = Arc::new(GalerkinSpace::spectral(2).unwrap());
    let p = Problem {
        drift: DriftOperator::zero(space.clone()),
        diffusion: DiffusionOperator::constant(space.h_weights(), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.25]))
            .unwrap(),
        h: OperatorValuedIntegrand::zero(2, 1),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::explicit(vec![1.0]).unwrap(),
    };
    let dts = [0.25, 0.125, 0.0625];
    let table = convergence_study(&p, &InitialState::zero(2), &SolverConfig::new(0.25, 1.0, 1, 2), &dts, 20, ExecMode::default())
        .unwrap();
    for row in &table.rows {
        assert!(row.error < 1e-14, "{table:?}");
    }
}

#[test]
fn p4_rate_is_positive() {
    let space = Arc::new(GalerkinSpace::sobolev(4, 4.0).unwrap());
    let p = Problem {
        drift: make_p_laplace(space.clone(), 4.0).unwrap(),
        diffusion: DiffusionOperator::zero(space.h_weights(), 1),
        h: OperatorValuedIntegrand::zero(4, 1),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::explicit(vec![1.0]).unwrap(),
    };
    let dts: Vec<f64> = (3..=6).map(|j| 2f64.powi(-j)).collect();
    let x0 = InitialState::Deterministic { coeffs: vec![1.0, 0.5, 0.0, 0.2] };
    let table = convergence_study(&p, &x0, &SolverConfig::new(dts[0], 0.5, 0, 0), &dts, 1, ExecMode::default()).unwrap();
    assert!(table.slope.unwrap() >= 0.5, "{table:?}");
}

#[test]
fn non_hilbert_space_needs_declared_range() {
    let space = Arc::new(GalerkinSpace::sobolev(3, 4.0).unwrap());
    let mut p = Problem {
        drift: make_p_laplace(space.clone(), 4.0).unwrap(),
        diffusion: DiffusionOperator::zero(space.h_weights(), 1),
        h: OperatorValuedIntegrand::constant(DMatrix::from_element(3, 1, 1.0)).unwrap(),
        kernel: make_fbm_kernel(0.75).unwrap(),
        noise: NoiseSpec::explicit(vec![1.0]).unwrap(),
    };
    assert!(matches!(p.validate(), Err(gspde::Error::Range(_))));
    p.h = OperatorValuedIntegrand::constant(DMatrix::from_element(3, 1, 1.0))
        .unwrap()
        .with_projection(vec![0, 1, 2])
        .unwrap();
    assert!(p.validate().is_ok());
}
