use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use invhess_core::linalg::{givens, max_abs, rotation2};
use invhess_core::matgeo::{cartan_factor, pi_map, q_map, stratum_compat_check, stratum_signature};
use invhess_core::Error;

fn rotation3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    givens(3, 0, 1, a) * givens(3, 1, 2, b) * givens(3, 0, 2, c)
}

#[test]
fn stratum_examples() {
    let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 3.0]));
    let s = stratum_compat_check(&c, 1e-6).unwrap();
    assert_eq!((s.columns, s.metric), (vec![2, 1], vec![1, 2]));
    let r = rotation3(0.3, 0.2, -1.0);
    let s =
        stratum_compat_check(&(&r * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 1.0]))), 1e-6).unwrap();
    assert_eq!((s.columns, s.metric), (vec![2, 1], vec![1, 2]));
    assert_eq!(stratum_signature(&DMatrix::identity(4, 4), 1e-6).partition, vec![4]);
}

#[test]
fn near_equal_columns_respect_the_gap() {
    let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 + 1e-9]));
    assert_eq!(stratum_compat_check(&c, 1e-6).unwrap().columns, vec![2]);
    let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 + 1e-3]));
    assert_eq!(stratum_compat_check(&c, 1e-6).unwrap().columns, vec![1, 1]);
}

#[test]
fn orthogonal_columns_required() {
    let c = rotation2(0.2) * DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    assert!(matches!(cartan_factor(&c), Err(Error::NotOrthogonalColumns { .. })));
}

proptest! {
    #[test]
    fn equivariance(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
                    s in proptest::collection::vec(0.3f64..3.0, 3), t in -3.0f64..3.0) {
        let frame = rotation3(a, b, c) * DMatrix::from_diagonal(&DVector::from_vec(s.clone())) * rotation3(t, -a, c);
        let r = rotation3(b, t, a);
        let p = pi_map(&frame).unwrap();
        let scale = max_abs(&p);
        prop_assert!(max_abs(&(pi_map(&(&frame * &r)).unwrap() - &p)) < 1e-12 * scale);
        prop_assert!(max_abs(&(pi_map(&(&r * &frame)).unwrap() - &r * &p * r.transpose())) < 1e-12 * scale);
        prop_assert!(max_abs(&(q_map(&(&r * &frame)) - q_map(&frame))) < 1e-12 * max_abs(&q_map(&frame)));
    }

    #[test]
    fn cartan_round_trip(a in -3.0f64..3.0, s in proptest::collection::vec(0.3f64..3.0, 2)) {
        let b = rotation2(a);
        let c = &b * DMatrix::from_diagonal(&DVector::from_vec(s.clone()));
        let f = cartan_factor(&c).unwrap();
        let back = &f.rotation * DMatrix::from_diagonal(&f.scales);
        prop_assert!(max_abs(&(back - &c)) < 1e-13);
        let expect = &b * DMatrix::from_diagonal(&DVector::from_vec(s.iter().map(|v| 1.0 / (v * v)).collect())) * b.transpose();
        prop_assert!(max_abs(&(pi_map(&c).unwrap() - expect)) < 1e-12);
    }
}
