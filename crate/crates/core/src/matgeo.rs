//! Frames as invertible matrices: the metric map `pi(A) = A^{-T} A^{-1}`,
//! the Gram map `q(A) = A^T A`, the orthogonal-columns set and its
//! `B Lambda` factorization, and eigenvalue strata.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, max_abs, offdiag_max, sym_eigen, symmetrize};

const MAX_CONDITION: f64 = 1e12;

fn check_regular(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let condition = condition_number(a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    Ok(())
}

/// The metric for which the columns of `A` are orthonormal.
pub fn pi_map(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_regular(a)?;
    let inv = a.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok(symmetrize(&(inv.transpose() * inv)))
}

pub fn q_map(a: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(a.transpose() * a))
}

/// Off-diagonal part of `A^T A` relative to its size; zero exactly when the
/// columns are orthogonal.
pub fn orthogonality_defect(a: &DMatrix<f64>) -> f64 {
    let g = q_map(a);
    let scale = max_abs(&g);
    if scale == 0.0 {
        return f64::INFINITY;
    }
    offdiag_max(&g) / scale
}

pub fn in_orthogonal_columns(a: &DMatrix<f64>) -> bool {
    orthogonality_defect(a) < 1e-9
}

/// `C = B Lambda` with `B` orthogonal and `Lambda` the positive column norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanFactor {
    pub rotation: DMatrix<f64>,
    pub scales: DVector<f64>,
}

pub fn cartan_factor(c: &DMatrix<f64>) -> Result<CartanFactor> {
    check_regular(c)?;
    let defect = orthogonality_defect(c);
    if !(defect < 1e-9) {
        return Err(Error::NotOrthogonalColumns { defect });
    }
    let scales = DVector::from_iterator(c.ncols(), c.column_iter().map(|col| col.norm()));
    let mut rotation = c.clone();
    for (j, s) in scales.iter().enumerate() {
        rotation.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(CartanFactor { rotation, scales })
}

/// Eigenvalues in ascending order grouped into clusters of near-equal values.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumSignature {
    pub partition: Vec<usize>,
    pub eigenvalues: Vec<f64>,
}

/// Group sorted positive values: consecutive values merge when their
/// relative gap is below `rel_gap`.
pub fn cluster_sorted(values: &[f64], rel_gap: f64) -> Vec<usize> {
    let mut partition = Vec::new();
    let mut run = 0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 && (v - values[i - 1]) / values[i - 1].abs() >= rel_gap {
            partition.push(run);
            run = 0;
        }
        run += 1;
    }
    if run > 0 {
        partition.push(run);
    }
    partition
}

pub fn stratum_signature(m: &DMatrix<f64>, rel_gap: f64) -> StratumSignature {
    let (eigenvalues, _) = sym_eigen(m);
    let eigenvalues = eigenvalues.as_slice().to_vec();
    StratumSignature { partition: cluster_sorted(&eigenvalues, rel_gap), eigenvalues }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumCompat {
    /// Signature of the ascending column norms of `C`.
    pub columns: Vec<usize>,
    /// Signature of `pi(C)`.
    pub metric: Vec<usize>,
}

/// Stratum of a frame with orthogonal columns against the stratum of its
/// metric. `pi` inverts and squares the column norms, so the ascending
/// signatures are reverses of each other.
pub fn stratum_compat_check(c: &DMatrix<f64>, rel_gap: f64) -> Result<StratumCompat> {
    let factor = cartan_factor(c)?;
    let mut norms = factor.scales.as_slice().to_vec();
    norms.sort_by(f64::total_cmp);
    let columns = cluster_sorted(&norms, rel_gap);
    let metric = stratum_signature(&pi_map(c)?, rel_gap).partition;
    let mut reversed = columns.clone();
    reversed.reverse();
    if reversed != metric {
        return Err(Error::SignatureMismatch { left: columns, right: metric });
    }
    Ok(StratumCompat { columns, metric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation2;

    #[test]
    fn pi_of_diagonal_frame() {
        let b = rotation2(0.4);
        let lam = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let c = &b * &lam;
        let expect = &b * DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 4.0])) * b.transpose();
        assert!(max_abs(&(pi_map(&c).unwrap() - expect)) < 1e-13);
    }

    #[test]
    fn cartan_factor_recovers_scales() {
        let c = rotation2(1.1) * DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.2]));
        let f = cartan_factor(&c).unwrap();
        assert!((f.scales[0] - 3.0).abs() < 1e-14 && (f.scales[1] - 0.2).abs() < 1e-14);
        assert!(max_abs(&(&f.rotation - rotation2(1.1))) < 1e-14);
    }

    #[test]
    fn skewed_columns_are_rejected() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(cartan_factor(&c), Err(Error::NotOrthogonalColumns { .. })));
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(matches!(pi_map(&s), Err(Error::Singular { .. })));
    }

    #[test]
    fn clustering() {
        assert_eq!(cluster_sorted(&[1.0, 1.0 + 1e-9, 2.0], 1e-6), vec![2, 1]);
        assert_eq!(cluster_sorted(&[1.0, 2.0, 3.0], 1e-6), vec![1, 1, 1]);
        assert_eq!(cluster_sorted(&[4.0, 4.0, 4.0], 1e-6), vec![3]);
    }

    #[test]
    fn metric_signature_is_reversed() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 3.0]));
        let s = stratum_compat_check(&c, 1e-6).unwrap();
        assert_eq!(s.columns, vec![2, 1]);
        assert_eq!(s.metric, vec![1, 2]);
    }
}
