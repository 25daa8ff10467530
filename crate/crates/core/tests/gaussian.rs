use gspde::gaussian::*;
use gspde::kernel::{make_fbm_kernel, TimeFunction};
use gspde::par::ExecMode;
use gspde::stats::MeanEstimate;
use nalgebra::{DMatrix, DVector};

fn fbm() -> gspde::kernel::CovarianceKernel {
    make_fbm_kernel(0.75).unwrap()
}

#[test]
fn scalar_variance_and_covariance() {
    let grid = TimeGrid::uniform(1.0, 65).unwrap();
    let e = sample_scalar(&fbm(), &grid, 10_000, 42).unwrap();
    let g1 = e.node_samples(64, 0);
    let g05 = e.node_samples(32, 0);
    let var = MeanEstimate::from_samples(&g1.iter().map(|x| x * x).collect::<Vec<_>>());
    assert!(var.agrees_with(1.0, 3.0), "{var:?}");
    let cov = MeanEstimate::from_samples(&g1.iter().zip(&g05).map(|(a, b)| a * b).collect::<Vec<_>>());
    assert!(cov.agrees_with(0.5, 3.0), "{cov:?}");
}

#[test]
fn paths_start_at_zero_and_need_a_count() {
    let grid = TimeGrid::uniform(1.0, 9).unwrap();
    let e = sample_scalar(&fbm(), &grid, 1, 0).unwrap();
    assert_eq!(e.value(0, 0, 0), 0.0);
    assert!(matches!(sample_scalar(&fbm(), &grid, 0, 0), Err(gspde::Error::Domain(_))));
}

#[test]
fn vector_norm_and_independence() {
    let grid = TimeGrid::uniform(1.0, 33).unwrap();
    let spec = NoiseSpec::power_law(1.0, 3.0, 8).unwrap();
    let e = sample_G(&fbm(), &spec, &grid, 20_000, 7).unwrap();
    let norms: Vec<f64> = (0..e.n_paths())
        .map(|p| (0..8).map(|c| e.value(p, 32, c).powi(2)).sum())
        .collect();
    let expect: f64 = (1..=8).map(|n| (n as f64).powi(-3)).sum();
    assert!((expect - 1.1951602435617104).abs() < 1e-15);
    assert!(MeanEstimate::from_samples(&norms).agrees_with(expect, 3.0));
    let cross: Vec<f64> = (0..e.n_paths()).map(|p| e.value(p, 32, 0) * e.value(p, 32, 1)).collect();
    assert!(MeanEstimate::from_samples(&cross).agrees_with(0.0, 3.0));
}

#[test]
fn execution_modes_agree_bitwise() {
    let grid = TimeGrid::uniform(1.0, 40).unwrap();
    let spec = NoiseSpec::power_law(1.0, 2.5, 3).unwrap();
    let a = sample_g_with(&fbm(), &spec, &grid, 150, 3, ExecMode::Sequential).unwrap();
    let b = sample_g_with(&fbm(), &spec, &grid, 150, 3, ExecMode::Parallel).unwrap();
    assert_eq!(a, b);
    let c = sample_g_with(&fbm(), &spec, &grid, 150, 4, ExecMode::Parallel).unwrap();
    assert_ne!(a, c);
}

#[test]
fn scalar_integrals_telescope() {
    let grid = TimeGrid::uniform(2.0, 17).unwrap();
    let k = fbm().with_horizon(2.0).unwrap();
    let e = sample_scalar(&k, &grid, 50, 9).unwrap();
    let zero = integrate_scalar(&TimeFunction::scalar_constant(0.0), &e).unwrap();
    assert!(zero.iter().all(|x| *x == 0.0));
    let one = integrate_scalar(&TimeFunction::scalar_constant(1.0), &e).unwrap();
    let half = integrate_scalar(&TimeFunction::indicator(0.0, 1.0, 2.0), &e).unwrap();
    for p in 0..50 {
        assert!((one[(p, 0)] - e.value(p, 16, 0)).abs() < 1e-14);
        assert!((half[(p, 0)] - e.value(p, 8, 0)).abs() < 1e-14);
    }
}

#[test]
fn scalar_integration_is_linear() {
    let grid = TimeGrid::uniform(1.0, 33).unwrap();
    let e = sample_scalar(&fbm(), &grid, 30, 10).unwrap();
    let f = TimeFunction::monomial(1);
    let h = TimeFunction::scalar_closure(|t| (3.0 * t).cos());
    let comb = TimeFunction::scalar_closure(|t| 2.0 * t - 0.5 * (3.0 * t).cos());
    let a = integrate_scalar(&f, &e).unwrap();
    let b = integrate_scalar(&h, &e).unwrap();
    let c = integrate_scalar(&comb, &e).unwrap();
    assert!((c - (a * 2.0 - b * 0.5)).amax() < 1e-14);
}

#[test]
fn operator_integrals() {
    let grid = TimeGrid::uniform(1.0, 17).unwrap();
    let one = NoiseSpec::explicit(vec![1.0]).unwrap();
    let e = sample_G(&fbm(), &one, &grid, 20, 1).unwrap();
    let w = integrate_operator(&OperatorValuedIntegrand::identity(1), &e).unwrap();
    for p in 0..20 {
        for k in 0..17 {
            assert_eq!(w.at(p, k)[0], e.value(p, k, 0));
        }
    }
    let z = integrate_operator(&OperatorValuedIntegrand::zero(3, 1), &e).unwrap();
    assert!(z.data.iter().all(|x| *x == 0.0));
    let bad = OperatorValuedIntegrand::zero(3, 2);
    assert!(matches!(integrate_operator(&bad, &e), Err(gspde::Error::DimensionMismatch { .. })));
}

#[test]
fn isometry_examples() {
    let k = fbm();
    let grid = TimeGrid::uniform(1.0, 129).unwrap();
    let e = sample_scalar(&k, &grid, 20_000, 77).unwrap();
    let one = TimeFunction::scalar_constant(1.0);
    let r = verify_isometry(&one, &one, &k, &e, 0.9973).unwrap();
    assert!(r.pass && (r.quadrature_value - 1.0).abs() < 1e-12, "{r:?}");
    let r = verify_isometry(&one, &TimeFunction::scalar_constant(0.0), &k, &e, 0.9973).unwrap();
    assert!(r.pass && r.mc_estimate == 0.0 && r.quadrature_value == 0.0);
    let r = verify_isometry(&TimeFunction::monomial(1), &one, &k, &e, 0.9973).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn noise_identity_examples() {
    let k = fbm();
    let grid = TimeGrid::uniform(1.0, 33).unwrap();
    let spec = NoiseSpec::power_law(1.0, 3.0, 8).unwrap();
    let e = sample_G(&k, &spec, &grid, 20_000, 5).unwrap();
    let id = OperatorValuedIntegrand::identity(8);
    let mut e1 = DVector::zeros(8);
    e1[0] = 1.0;
    let r = verify_dg_identities(&id, &id, &e1, &e1, &spec, &k, &e, 0.9973).unwrap();
    assert!(r.pass(), "{r:?}");
    assert!((r.pairing.quadrature_value - 1.0).abs() < 1e-10);
    assert!((r.trace.quadrature_value - 1.1951602435617104).abs() < 1e-10);
    let zero = OperatorValuedIntegrand::zero(8, 8);
    let r = verify_dg_identities(&zero, &id, &e1, &e1, &spec, &k, &e, 0.9973).unwrap();
    assert!(r.pass() && r.trace.quadrature_value == 0.0 && r.trace.mc_estimate == 0.0);
}

#[test]
fn gaussianity_and_fidelity() {
    let k = make_fbm_kernel(0.6).unwrap();
    let grid = TimeGrid::uniform(1.0, 64).unwrap();
    let e = sample_scalar(&k, &grid, 10_000, 8).unwrap();
    let nodes = even_subgrid(64, 8);
    assert_eq!(nodes.len(), 8);
    let fid = covariance_fidelity(&e, &k, &nodes, 0, 3.0).unwrap();
    assert!(fid.pass, "{fid:?}");
    let norm = normality_check(&e, &nodes[1..], 0, 5.0);
    assert!(norm.pass, "{norm:?}");
}

#[test]
fn continuity_proxy_shrinks() {
    let k = fbm();
    let spec = NoiseSpec::power_law(1.0, 3.0, 4).unwrap();
    let h = OperatorValuedIntegrand::identity(4).with_exponent(k.p() + 0.5);
    let r = continuity_proxy(&k, &spec, &h, &[32, 64, 128], 400, 3).unwrap().unwrap();
    assert!(r.monotone, "{r:?}");
    let undeclared = OperatorValuedIntegrand::identity(4);
    assert!(continuity_proxy(&k, &spec, &undeclared, &[32, 64], 10, 3).unwrap().is_none());
}

#[test]
fn truncation_error_follows_the_tail() {
    let spec = NoiseSpec::power_law(1.0, 3.0, 16).unwrap();
    let tail: f64 = (17..200_000).map(|n| (n as f64).powi(-3)).sum();
    let err = spec.truncation_error(&fbm(), 1.0).unwrap().unwrap();
    assert!((err - tail).abs() < 1e-6 * tail, "{err} vs {tail}");
    assert!(NoiseSpec::power_law(1.0, 2.0, 4).is_err());
}

#[test]
fn covariance_operator_is_diagonal() {
    let spec = NoiseSpec::explicit(vec![2.0, 0.5]).unwrap();
    assert_eq!(spec.covariance_operator(), DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5])));
}
