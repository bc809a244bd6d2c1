use std::f64::consts::FRAC_PI_2;

use invhess_core::catalog::rotated_exp;
use invhess_core::funcspace::{mixed_exponential, ConvexFunction, Domain, DEFAULT_RADIUS};
use invhess_core::jets2d::{quarter_distance, slope_constancy_check, Jet2D};

#[test]
fn rotated_separable_has_constant_angle() {
    let samples = Domain::Box { intervals: vec![(-1.0, 1.0), (-1.0, 1.0)] }.sample(200, DEFAULT_RADIUS);
    for theta in [0.3, 1.2, -0.4] {
        let r = slope_constancy_check(&rotated_exp(theta), &samples).unwrap();
        assert!(r.spread < 1e-9);
        assert!(quarter_distance(r.angle().unwrap(), theta) < 1e-9);
        assert!(r.max_quadric < 1e-9 && r.max_cubic < 1e-9);
        assert!(r.max_relative_quadric < 1e-12 && r.max_relative_cubic < 1e-12);
    }
}

#[test]
fn mixed_exponential_angle_moves() {
    let samples = Domain::Box { intervals: vec![(-1.0, 1.0), (-1.0, 1.0)] }.sample(100, DEFAULT_RADIUS);
    let r = slope_constancy_check(&mixed_exponential(), &samples).unwrap();
    assert!(r.spread > 1e-2);
    assert!(r.max_quadric > 1e-3);
    assert!(r.max_relative_quadric > 1e-3 && r.max_relative_cubic > 1e-3);
}

#[test]
fn quadratic_is_all_base_points() {
    let f = ConvexFunction::Quadratic { dim: 2, k: 1.0 };
    let r = slope_constancy_check(&f, &f.sample(20, 1.0)).unwrap();
    assert_eq!(r.base_point_hits, 20);
    assert_eq!(r.angle(), None);
}

#[test]
fn recovered_angle_is_reduced() {
    let j = Jet2D::at(&rotated_exp(1.0 + FRAC_PI_2), &[0.2, 0.3]).unwrap();
    let a = j.characteristic_angle().unwrap();
    assert!((0.0..FRAC_PI_2).contains(&a));
    assert!(quarter_distance(a, 1.0) < 1e-12);
}

#[test]
fn three_dimensional_function_is_rejected() {
    let f = ConvexFunction::Quadratic { dim: 3, k: 1.0 };
    assert!(slope_constancy_check(&f, &[vec![0.0; 3]]).is_err());
}
