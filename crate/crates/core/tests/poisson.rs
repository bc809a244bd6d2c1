use nalgebra::DMatrix;

use invhess_core::catalog::{rotated_exp, two_handle_family};
use invhess_core::funcspace::{mixed_exponential, separable_exp};
use invhess_core::poisson::{
    commuting_equiv_check, graded_jacobi_defect, kahler_bivector, schouten_bracket, schouten_bracket_fd,
    standard_bivector, BivectorField,
};
use invhess_core::propi::property_i_residual;

fn scaled(b: &BivectorField, s: f64, x: &[f64]) -> BivectorField {
    BivectorField::Constant(b.at(x).unwrap() * s)
}

#[test]
fn bracket_is_antisymmetric_tensor() {
    let f = mixed_exponential();
    let x = [0.2, -0.1];
    let t = schouten_bracket(&standard_bivector(2), &kahler_bivector(&f), &x).unwrap();
    let m = t.dim;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                assert!((t.get(a, b, c) + t.get(b, a, c)).abs() < 1e-14);
                assert!((t.get(a, b, c) + t.get(a, c, b)).abs() < 1e-14);
            }
        }
    }
    assert!(t.max_abs() > 1e-3);
}

#[test]
fn bracket_is_linear_in_the_constant_slot() {
    let f = mixed_exponential();
    let x = [0.4, 0.3];
    let p = kahler_bivector(&f);
    let base = schouten_bracket(&standard_bivector(2), &p, &x).unwrap();
    let tripled = schouten_bracket(&scaled(&standard_bivector(2), 3.0, &x), &p, &x).unwrap();
    for (a, b) in base.entries.iter().zip(&tripled.entries) {
        assert!((3.0 * a - b).abs() < 1e-12);
    }
}

#[test]
fn bracket_entries_are_the_residual() {
    let f = mixed_exponential();
    let x = [-0.3, 0.5];
    let t = schouten_bracket(&standard_bivector(2), &kahler_bivector(&f), &x).unwrap();
    let r = property_i_residual(&f, &x).unwrap();
    let n = 2;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                assert!((t.get(n + i, j, n + k) - r.get(j, i, k)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn analytic_bracket_matches_differences() {
    let f = rotated_exp(0.2);
    let x = [0.1, 0.4];
    let p = kahler_bivector(&f);
    let a = schouten_bracket(&standard_bivector(2), &p, &x).unwrap();
    let b = schouten_bracket_fd(&standard_bivector(2), &p, &x, 1e-3).unwrap();
    let gap = a.entries.iter().zip(&b.entries).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-7);
}

#[test]
fn kahler_bivector_is_always_poisson() {
    for f in [mixed_exponential(), separable_exp(2), two_handle_family(2.0).unwrap()] {
        for x in f.sample(5, 3.0) {
            assert!(graded_jacobi_defect(&f, &x, 1e-3).unwrap() < 1e-8, "{x:?}");
        }
    }
}

#[test]
fn commuting_report_separates_examples() {
    let good = separable_exp(2);
    let r = commuting_equiv_check(&good, &good.sample(10, 1.0), 1e-3).unwrap();
    assert!(r.max_bracket < 1e-9 && r.max_identity_gap < 1e-9);
    let bad = mixed_exponential();
    let r = commuting_equiv_check(&bad, &bad.sample(10, 1.0), 1e-3).unwrap();
    assert!(r.rows.iter().all(|row| row.bracket > 1e-3));
    assert!(r.max_identity_gap < 1e-9);
}

#[test]
fn constant_fields_commute() {
    let a = standard_bivector(2);
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 1)] = 2.0;
    m[(1, 0)] = -2.0;
    let t = schouten_bracket(&a, &BivectorField::Constant(m), &[0.0, 0.0]).unwrap();
    assert_eq!(t.max_abs(), 0.0);
}
