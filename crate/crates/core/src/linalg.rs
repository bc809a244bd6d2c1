//! Small dense linear-algebra helpers shared by every module.
//!
//! All matrix norms here are max-abs-entry norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest off-diagonal entry in absolute value.
pub fn offdiag_max(m: &DMatrix<f64>) -> f64 {
    let mut out = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                out = out.max(m[(i, j)].abs());
            }
        }
    }
    out
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Counter-clockwise rotation of the plane by `theta`.
pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Rotation by `theta` in the (i, j) coordinate plane of R^n.
pub fn givens(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n, n);
    let (s, c) = theta.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

/// Eigen-decomposition of a symmetric matrix with a deterministic frame.
///
/// Eigenvalues ascend; each eigenvector has its largest-magnitude entry
/// positive; the last column is flipped if needed so that det = +1.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut frame = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let mut best = 0;
        for r in 1..n {
            if v[r].abs() > v[best].abs() + 1e-14 {
                best = r;
            }
        }
        if v[best] < 0.0 {
            v = -v;
        }
        frame.set_column(col, &v);
    }
    if n > 0 && frame.determinant() < 0.0 {
        let last = -frame.column(n - 1).into_owned();
        frame.set_column(n - 1, &last);
    }
    (values, frame)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    Some(symmetrize(&chol.inverse()))
}

/// Condition number in the 2-norm, from singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn is_special_orthogonal(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    m.is_square() && max_abs(&(m.transpose() * m - DMatrix::identity(n, n))) < tol && m.determinant() > 0.0
}

/// Halton sequence point `index` (1-based works best) in [0, 1)^dim.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
