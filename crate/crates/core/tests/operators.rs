use std::sync::Arc;

use gspde::gaussian::TimeGrid;
use gspde::operators::*;
use nalgebra::{DMatrix, DVector};

fn heat(n: usize) -> DriftOperator {
    make_linear_heat(Arc::new(GalerkinSpace::spectral(n).unwrap())).unwrap()
}

fn p4(n: usize) -> DriftOperator {
    make_p_laplace(Arc::new(GalerkinSpace::sobolev(n, 4.0).unwrap()), 4.0).unwrap()
}

fn porous3(n: usize) -> DriftOperator {
    make_porous_medium(Arc::new(GalerkinSpace::porous(n, 3.0).unwrap()), 3.0).unwrap()
}

fn no_b(a: &DriftOperator, du: usize) -> DiffusionOperator {
    DiffusionOperator::zero(a.space().h_weights(), du)
}

#[test]
fn declared_conditions_hold_for_shipped_operators() {
    for a in [heat(8), p4(8), porous3(8)] {
        let b = no_b(&a, 2);
        let h1 = check_h1(&a, 40, 1);
        let h2 = check_h2(&a, &b, 1000, 2);
        let h3 = check_h3(&a, &b, 1000, 3);
        let h4 = check_h4(&a, 300, 4);
        assert!(h1.pass, "{:?} {h1:?}", a.kind());
        assert!(h2.pass && h2.worst_c <= 0.0, "{:?} {h2:?}", a.kind());
        assert!(h3.pass, "{:?} {h3:?}", a.kind());
        assert!(h4.pass, "{:?} {h4:?}", a.kind());
    }
}

#[test]
fn growth_slopes() {
    let s = check_h4(&p4(6), 50, 9).slope.unwrap();
    assert!((s - 3.0).abs() < 0.1, "{s}");
    let s = check_h4(&heat(6), 50, 9).slope.unwrap();
    assert!((s - 1.0).abs() < 0.1, "{s}");
}

#[test]
fn sign_drift_fails_hemicontinuity() {
    let a = DriftOperator::sign(Arc::new(GalerkinSpace::sobolev(8, 2.0).unwrap()));
    let r = check_h1(&a, 40, 5);
    assert!(!r.pass, "{r:?}");
    assert!(r.worst_ratio > 0.9);
}

#[test]
fn linear_drift_jumps_halve() {
    let r = check_h1(&heat(6), 20, 6);
    for x in &r.ratios {
        assert!((x - 0.5).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn zero_pair_has_zero_margins() {
    let a = DriftOperator::zero(Arc::new(GalerkinSpace::spectral(4).unwrap()));
    let b = no_b(&a, 4);
    let h2 = check_h2(&a, &b, 50, 1);
    assert!(h2.pass && h2.worst_c == 0.0);
    let h4 = check_h4(&a, 50, 1);
    assert!(h4.pass && h4.slope.is_none());
}

#[test]
fn lipschitz_multiplication_needs_c_equal_l_squared() {
    let a = DriftOperator::zero(Arc::new(GalerkinSpace::spectral(6).unwrap()));
    let b = DiffusionOperator::multiplication(a.space().h_weights(), 3, 0.7, MultiplicationProfile::Linear, 0).unwrap();
    let r = check_h2(&a, &b, 1000, 7);
    assert!(r.pass, "{r:?}");
    assert!((r.worst_c - 0.49).abs() < 1e-12);
    // declaring a smaller constant must fail
    let strict = a.clone().with_constants(DeclaredConstants { c: -0.1, ..*a.constants() }).unwrap();
    assert!(!check_h2(&strict, &b, 100, 7).pass);
}

#[test]
fn shift_by_zero_path_changes_nothing() {
    let a = p4(6);
    let b = DiffusionOperator::multiplication(a.space().h_weights(), 2, 0.5, MultiplicationProfile::Sine, 1).unwrap();
    let grid = TimeGrid::uniform(1.0, 5).unwrap();
    let w = Arc::new(NoisePath::zero(grid, 6));
    let (ab, bb) = shift_operators(&a, &b, w, None).unwrap();
    for t in [0.0, 0.3, 1.0] {
        let v = DVector::from_fn(6, |i, _| (i as f64 - 2.5) * 0.3);
        assert_eq!(ab.eval(t, &v), a.eval(t, &v));
        assert_eq!(bb.eval(t, &v), b.eval(t, &v));
    }
}

#[test]
fn shifted_heat_adds_laplacian_of_path() {
    let a = heat(4);
    let b = no_b(&a, 4);
    let grid = TimeGrid::uniform(1.0, 3).unwrap();
    let data = [0.0, 0.0, 0.0, 0.0, 0.5, -1.0, 0.0, 2.0, 1.5, 0.0, 0.25, 0.0];
    let w = Arc::new(NoisePath::new(grid, 4, &data).unwrap());
    let (ab, _) = shift_operators(&a, &b, w.clone(), None).unwrap();
    let v = DVector::from_vec(vec![1.0, 0.5, -0.5, 0.25]);
    for t in [0.5, 0.7, 1.0] {
        let expect = a.eval(t, &v) + a.eval(t, w.at(t));
        assert!((ab.eval(t, &v) - expect).amax() < 1e-12);
    }
    // left-closed lookup
    assert_eq!(w.at(0.7), w.node(1));
    assert!(matches!(
        shift_operators(&a, &b, w.clone(), Some(&[0, 1])),
        Err(gspde::Error::Range(_))
    ));
    let short = Arc::new(NoisePath::zero(TimeGrid::uniform(1.0, 3).unwrap(), 3));
    assert!(matches!(shift_operators(&a, &b, short, None), Err(gspde::Error::Range(_))));
}

#[test]
fn monotonicity_survives_the_shift() {
    for a in [p4(6), porous3(6)] {
        let b = DiffusionOperator::constant(a.space().h_weights(), DMatrix::from_element(6, 2, 0.3)).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let data: Vec<f64> = (0..24).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.2).collect();
        let w = Arc::new(NoisePath::new(grid, 6, &data).unwrap());
        let (ab, bb) = shift_operators(&a, &b, w, None).unwrap();
        let plain = check_h2(&a, &b, 500, 11);
        let moved = check_h2(&ab, &bb, 500, 11);
        assert!(plain.pass && moved.pass);
        assert_eq!(plain.declared_c, moved.declared_c);
    }
}

#[test]
fn duality_is_consistent_on_samples() {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = gspde::rng::StreamFamily::new(21, gspde::rng::Domain::Harness).stream(0);
    for a in [heat(6), p4(6), porous3(6)] {
        let s = a.space();
        for _ in 0..50 {
            let u = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let f = a.eval(0.0, &u);
            assert!(s.pairing(&f, &v).abs() <= s.dual_norm(&f) * s.v_norm(&v) * (1.0 + 1e-8));
        }
    }
}

#[test]
fn operator_config_parses_from_toml() {
    let cfg: OperatorConfig = toml::from_str(
        r#"
        n = 4
        wiener_dim = 2
        drift = { type = "p_laplace", p = 4.0 }
        diffusion = { type = "rank1", mode = 0, column = 1, scale = 0.5 }
        "#,
    )
    .unwrap();
    let pair = cfg.build().unwrap();
    assert_eq!(pair.diffusion.dim_u(), 2);
    assert_eq!(pair.drift.params(), vec![("p", 4.0)]);
    let bad: Result<OperatorConfig, _> = toml::from_str("n = 4\ndrift = { type = \"p_laplace\", q = 4.0 }");
    assert!(bad.is_err());
}
