use nalgebra::{DMatrix, DVector};

use invhess_core::catalog::rotated_exp;
use invhess_core::connection::{
    characteristic_recovery, frame_distance_up_to_signs, horizontal_lift, property_c_check, property_c_residual,
    CurveSpec, LiftOptions,
};
use invhess_core::funcspace::{mixed_exponential, separable_exp, ConvexFunction, OneDPiece};
use invhess_core::linalg::{max_abs, offdiag_max, rotation2, sym_eigen};
use invhess_core::matgeo::cartan_factor;
use invhess_core::Error;

fn separable2() -> ConvexFunction {
    ConvexFunction::Separable(vec![
        OneDPiece::Exp { scale: 1.0, rate: 1.0 },
        OneDPiece::Sum(vec![OneDPiece::Power { degree: 4, coefficient: 0.25 }, OneDPiece::Quadratic { k: 0.5 }]),
    ])
}

fn diagonal_frame(f: &ConvexFunction, x: &[f64]) -> DMatrix<f64> {
    let h = f.eval_jet3(x).unwrap().hessian;
    DMatrix::from_diagonal(&DVector::from_fn(h.nrows(), |i, _| 1.0 / h[(i, i)].sqrt()))
}

#[test]
fn separable_lift_stays_diagonal() {
    let f = separable2();
    let curve = CurveSpec::Segment { origin: vec![-0.5, 0.3], direction: vec![1.0, -0.8], t_max: 1.2 };
    let a0 = diagonal_frame(&f, &[-0.5, 0.3]);
    let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default()).unwrap();
    assert!(r.c_drift < 1e-8);
    assert!(r.orthonormality_drift < 1e-8);
    // leaves of the orthogonal-columns set: the rotation part stays fixed
    for s in &r.samples {
        let c = cartan_factor(&s.frame).unwrap();
        assert!(max_abs(&(c.rotation - DMatrix::identity(2, 2))) < 1e-8);
    }
}

#[test]
fn lift_frames_square_to_inverse_hessian() {
    let f = mixed_exponential();
    let curve = CurveSpec::Polyline { points: vec![vec![0.0, 0.0], vec![0.5, 0.2], vec![0.1, -0.4]] };
    let h0 = f.eval_jet3(&[0.0, 0.0]).unwrap().hessian;
    let (l, e) = sym_eigen(&h0);
    let a0 = &e * DMatrix::from_diagonal(&l.map(|v| 1.0 / v.sqrt()));
    let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default()).unwrap();
    assert!(r.orthonormality_drift < 1e-8);
    for s in r.samples.iter().step_by(50) {
        let hinv = f.eval_jet3(&s.point).unwrap().hessian.try_inverse().unwrap();
        assert!(max_abs(&(&s.frame * s.frame.transpose() - hinv)) < 1e-8);
    }
    // the lift leaves the orthogonal-columns set for this function
    assert!(r.c_drift > 1e-6);
}

#[test]
fn rk4_order_on_exponential() {
    let f = separable_exp(1);
    let curve = CurveSpec::Segment { origin: vec![0.0], direction: vec![1.0], t_max: 1.0 };
    let err = |h: f64| {
        let o = LiftOptions { step: h, check_halving: false, tolerance: 1.0 };
        let r = horizontal_lift(&f, &curve, &DMatrix::identity(1, 1), o).unwrap();
        (r.final_frame()[(0, 0)] - (-0.5f64).exp()).abs()
    };
    let ratio = err(0.2) / err(0.1);
    assert!((14.0..=18.0).contains(&ratio), "{ratio}");
}

#[test]
fn arc_lift_in_flat_metric_is_constant() {
    let f = ConvexFunction::Quadratic { dim: 3, k: 2.0 };
    let curve = CurveSpec::Arc { center: vec![0.0, 0.0, 1.0], radius: 2.0, start: 0.0, end: 3.0 };
    let a0 = rotation2(0.3).insert_row(2, 0.0).insert_column(2, 0.0) * 0.5;
    let mut a0 = a0;
    a0[(2, 2)] = 0.5;
    let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default()).unwrap();
    assert_eq!(r.orthonormality_drift, 0.0);
    assert_eq!(r.final_frame(), &a0);
}

#[test]
fn halving_check_flags_coarse_steps() {
    let f = separable_exp(1);
    let curve = CurveSpec::Segment { origin: vec![0.0], direction: vec![1.0], t_max: 3.0 };
    let o = LiftOptions { step: 0.5, check_halving: true, tolerance: 1e-10 };
    let r = horizontal_lift(&f, &curve, &DMatrix::identity(1, 1), o);
    assert!(matches!(r, Err(Error::IntegratorToleranceExceeded { .. })));
}

#[test]
fn property_c_residual_examples() {
    let q = ConvexFunction::Quadratic { dim: 2, k: 1.0 };
    let a = DMatrix::identity(2, 2) * 0.5f64.sqrt();
    let r = property_c_residual(&q, &[0.3, 0.1], &a).unwrap();
    assert_eq!((r.symmetric, r.reduced), (0.0, 0.0));
    let f = separable2();
    let x = [0.2, -0.6];
    let r = property_c_residual(&f, &x, &diagonal_frame(&f, &x)).unwrap();
    assert!(r.symmetric < 1e-12 && r.reduced < 1e-12);
    assert!(matches!(property_c_residual(&f, &x, &DMatrix::identity(2, 2)), Err(Error::NotOrthonormalFrame { .. })));
}

#[test]
fn no_tangent_frame_for_mixed_exponential() {
    let f = mixed_exponential();
    let x = [0.0, 0.0];
    let jet = f.eval_jet3(&x).unwrap();
    let (l, e) = sym_eigen(&jet.hessian);
    let root_inv = &e * DMatrix::from_diagonal(&l.map(|v| 1.0 / v.sqrt())) * e.transpose();
    // oracle: scan every orthonormal frame H^{-1/2} R(a) at 1e-3 resolution
    let mut best = f64::INFINITY;
    let steps = (std::f64::consts::PI / 1e-3) as usize;
    for i in 0..steps {
        let a = &root_inv * rotation2(i as f64 * 1e-3);
        let worst = jet.third.iter().map(|t| offdiag_max(&(a.transpose() * t * &a))).fold(0.0, f64::max);
        best = best.min(worst);
    }
    assert!(best > 1e-3);
    let c = property_c_check(&f, &x, None).unwrap();
    assert!(!c.found && c.residual > 1e-3);
}

#[test]
fn tangent_frame_matches_eigenframe() {
    let f = rotated_exp(0.4);
    let x = [0.3, -0.2];
    let c = property_c_check(&f, &x, Some(&[1.0, 2.0])).unwrap();
    assert!(c.found);
    let b = cartan_factor(&c.frame).unwrap().rotation;
    assert!(frame_distance_up_to_signs(&b, &rotation2(0.4)) < 1e-9);
}

#[test]
fn isotropic_point_searches_the_fiber() {
    let q = ConvexFunction::Quadratic { dim: 2, k: 1.5 };
    let c = property_c_check(&q, &[0.0, 0.0], None).unwrap();
    assert!(c.found);
    assert_eq!(c.residual, 0.0);
}

#[test]
fn recovery_examples() {
    let q = ConvexFunction::Quadratic { dim: 2, k: 1.0 };
    let r = characteristic_recovery(&q, &q.sample(10, 1.0)).unwrap();
    assert_eq!(r.frame, Some(DMatrix::identity(2, 2)));
    assert_eq!(r.max_offdiag, 0.0);
    let f = rotated_exp(std::f64::consts::FRAC_PI_6);
    let r = characteristic_recovery(&f, &f.sample(30, 1.0)).unwrap();
    assert!(frame_distance_up_to_signs(r.frame.as_ref().unwrap(), &rotation2(std::f64::consts::FRAC_PI_6)) < 1e-9);
    assert!(r.max_offdiag < 1e-9);
    let m = mixed_exponential();
    let r = characteristic_recovery(&m, &m.sample(30, 1.0)).unwrap();
    assert!(r.frame.is_none());
    assert!(r.optimized_min <= r.max_offdiag);
}

#[test]
fn pencil_confinement_along_diagonal_lifts() {
    // a lift that stays in the orthogonal-columns set confines the Hessians to one pencil
    let f = ConvexFunction::Rotated { matrix: rotation2(0.7).transpose(), inner: Box::new(separable2()) };
    let start = [0.1, 0.2];
    let h = f.eval_jet3(&start).unwrap().hessian;
    let (l, e) = sym_eigen(&h);
    let a0 = &e * DMatrix::from_diagonal(&l.map(|v| 1.0 / v.sqrt()));
    let curve = CurveSpec::Segment { origin: start.to_vec(), direction: vec![0.5, -1.0], t_max: 1.0 };
    let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default()).unwrap();
    assert!(r.c_drift < 1e-8);
    let b = cartan_factor(&a0).unwrap().rotation;
    for s in &r.samples {
        let hs = f.eval_jet3(&s.point).unwrap().hessian;
        assert!(offdiag_max(&(b.transpose() * hs * &b)) < 1e-7);
    }
}

#[test]
fn three_dimensional_recovery() {
    let r3 = invhess_core::linalg::givens(3, 0, 1, 0.4) * invhess_core::linalg::givens(3, 1, 2, -0.3);
    let inner = ConvexFunction::Separable(vec![
        OneDPiece::Exp { scale: 1.0, rate: 1.0 },
        OneDPiece::Exp { scale: 1.0, rate: -1.5 },
        OneDPiece::Power { degree: 2, coefficient: 0.7 },
    ]);
    let f = ConvexFunction::Rotated { matrix: r3.transpose(), inner: Box::new(inner) };
    let r = characteristic_recovery(&f, &f.sample(20, 1.0)).unwrap();
    assert!(frame_distance_up_to_signs(r.frame.as_ref().unwrap(), &r3) < 1e-8);
}
