//! Strictly convex functions with exact derivatives up to order three.
//!
//! Every built-in kind evaluates its gradient, Hessian and third-derivative
//! tensor analytically. Finite differences live in [`fd`] and serve only as
//! an independent oracle.

pub mod domain;
pub mod fd;
pub mod oned;
pub mod spec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::handles::HandleFamily;
use crate::legendre::NumericConjugate;
use crate::linalg::{sym_eigen, symmetrize};

pub use domain::{AffineMap, Domain, Polytope, DEFAULT_RADIUS};
pub use oned::{BarrierEnd, Derivs1, OneDPiece};

/// Point data of a function: value, gradient, Hessian and third derivatives.
///
/// `third[k]` is the matrix of partial derivatives of the Hessian along
/// coordinate `k`, so `T[i][j][k] = third[k][(i, j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub third: Vec<DMatrix<f64>>,
}

impl Jet3 {
    pub fn zeros(dim: usize) -> Self {
        Jet3 {
            value: 0.0,
            gradient: DVector::zeros(dim),
            hessian: DMatrix::zeros(dim, dim),
            third: vec![DMatrix::zeros(dim, dim); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn t(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[k][(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym_eigen(&self.hessian).0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Jet of `x -> g(M x)` at `x`, given the jet of `g` at `M x`.
    pub fn pulled_back(&self, m: &DMatrix<f64>) -> Jet3 {
        let n = m.ncols();
        let gradient = m.transpose() * &self.gradient;
        let hessian = symmetrize(&(m.transpose() * &self.hessian * m));
        // T'[a][b][c] = sum_ijk M_ia M_jb M_kc T[i][j][k]
        let mut third = Vec::with_capacity(n);
        for c in 0..n {
            let mut slice = DMatrix::zeros(self.dim(), self.dim());
            for (k, tk) in self.third.iter().enumerate() {
                let w = m[(k, c)];
                if w != 0.0 {
                    slice += tk * w;
                }
            }
            third.push(symmetrize(&(m.transpose() * slice * m)));
        }
        Jet3 { value: self.value, gradient, hessian, third }
    }

    fn add_assign(&mut self, other: &Jet3) {
        self.value += other.value;
        self.gradient += &other.gradient;
        self.hessian += &other.hessian;
        for (a, b) in self.third.iter_mut().zip(&other.third) {
            *a += b;
        }
    }
}

/// `w * e^{<a, x>}`
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub coefficients: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CustomTerm {
    /// `piece(<direction, x> + shift)`
    Ridge { direction: Vec<f64>, shift: f64, piece: OneDPiece },
    /// `x^T Q x / 2`
    QuadraticForm { matrix: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    /// `k |x|^2`
    Quadratic {
        dim: usize,
        k: f64,
    },
    /// `sum_i piece_i(x_i)`
    Separable(Vec<OneDPiece>),
    /// `inner(M x)` with `M` orthogonal.
    Rotated {
        matrix: DMatrix<f64>,
        inner: Box<ConvexFunction>,
    },
    /// `sum_t w_t e^{<a_t, x>} + quadratic * |x|^2`
    ExpAffine {
        dim: usize,
        terms: Vec<ExpTerm>,
        quadratic: f64,
    },
    HandleFamily(HandleFamily),
    Custom {
        dim: usize,
        terms: Vec<CustomTerm>,
    },
    /// Numerical Legendre transform of another function.
    Conjugate(NumericConjugate),
}

impl ConvexFunction {
    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Quadratic { dim, .. }
            | ConvexFunction::ExpAffine { dim, .. }
            | ConvexFunction::Custom { dim, .. } => *dim,
            ConvexFunction::Separable(pieces) => pieces.len(),
            ConvexFunction::Rotated { matrix, .. } => matrix.ncols(),
            ConvexFunction::HandleFamily(h) => h.dim(),
            ConvexFunction::Conjugate(c) => c.dim(),
        }
    }

    /// Characteristic axes rotated by `theta` in the plane: `inner(R(theta)^T x)`.
    pub fn rotated_by_angle(theta: f64, inner: ConvexFunction) -> Self {
        ConvexFunction::Rotated { matrix: crate::linalg::rotation2(theta).transpose(), inner: Box::new(inner) }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ConvexFunction::Quadratic { .. } | ConvexFunction::ExpAffine { .. } => true,
            ConvexFunction::Separable(pieces) => pieces.iter().zip(x).all(|(p, &v)| p.contains(v)),
            ConvexFunction::Rotated { matrix, inner } => {
                let y = matrix * DVector::from_column_slice(x);
                inner.contains(y.as_slice())
            }
            ConvexFunction::HandleFamily(h) => h.domain.contains(x),
            ConvexFunction::Custom { terms, .. } => terms.iter().all(|t| match t {
                CustomTerm::Ridge { direction, shift, piece } => piece.contains(dot(direction, x) + shift),
                CustomTerm::QuadraticForm { .. } => true,
            }),
            ConvexFunction::Conjugate(c) => c.contains(x),
        }
    }

    /// Natural sampling domain; membership is still filtered by `contains`.
    pub fn natural_domain(&self) -> Domain {
        match self {
            ConvexFunction::Separable(pieces) => {
                Domain::Box { intervals: pieces.iter().map(|p| p.interval()).collect() }
            }
            ConvexFunction::HandleFamily(h) => Domain::PolytopeWithHandles(h.domain.clone()),
            other => Domain::Whole { dim: other.dim() },
        }
    }

    /// Sample `count` in-domain points reproducibly.
    pub fn sample(&self, count: usize, radius: f64) -> Vec<Vec<f64>> {
        self.natural_domain().sample_filtered(count, radius, |x| self.contains(x))
    }

    /// Jet at `x` without membership or convexity checks.
    pub(crate) fn jet_unchecked(&self, x: &[f64]) -> Result<Jet3> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        match self {
            ConvexFunction::Quadratic { k, .. } => {
                let xv = DVector::from_column_slice(x);
                let mut jet = Jet3::zeros(n);
                jet.value = k * xv.norm_squared();
                jet.gradient = xv * (2.0 * k);
                jet.hessian = DMatrix::identity(n, n) * (2.0 * k);
                Ok(jet)
            }
            ConvexFunction::Separable(pieces) => {
                let mut jet = Jet3::zeros(n);
                for (i, (p, &v)) in pieces.iter().zip(x).enumerate() {
                    let d = p.derivs(v)?;
                    jet.value += d.f;
                    jet.gradient[i] = d.d1;
                    jet.hessian[(i, i)] = d.d2;
                    jet.third[i][(i, i)] = d.d3;
                }
                Ok(jet)
            }
            ConvexFunction::Rotated { matrix, inner } => {
                let y = matrix * DVector::from_column_slice(x);
                Ok(inner.jet_unchecked(y.as_slice())?.pulled_back(matrix))
            }
            ConvexFunction::ExpAffine { terms, quadratic, .. } => {
                let mut jet = ConvexFunction::Quadratic { dim: n, k: *quadratic }.jet_unchecked(x)?;
                for term in terms {
                    let d =
                        OneDPiece::Exp { scale: term.weight, rate: 1.0 }.derivs_unchecked(dot(&term.coefficients, x));
                    jet.add_assign(&ridge_jet(&term.coefficients, d));
                }
                Ok(jet)
            }
            ConvexFunction::Custom { terms, .. } => {
                let mut jet = Jet3::zeros(n);
                for term in terms {
                    match term {
                        CustomTerm::Ridge { direction, shift, piece } => {
                            let d = piece.derivs(dot(direction, x) + shift)?;
                            jet.add_assign(&ridge_jet(direction, d));
                        }
                        CustomTerm::QuadraticForm { matrix } => {
                            let xv = DVector::from_column_slice(x);
                            let q = symmetrize(matrix);
                            let mut part = Jet3::zeros(n);
                            part.value = 0.5 * xv.dot(&(&q * &xv));
                            part.gradient = &q * xv;
                            part.hessian = q;
                            jet.add_assign(&part);
                        }
                    }
                }
                Ok(jet)
            }
            ConvexFunction::HandleFamily(h) => h.jet_unchecked(x),
            ConvexFunction::Conjugate(c) => c.jet(x),
        }
    }

    /// Value, gradient, Hessian and third derivatives at `x`.
    pub fn eval_jet3(&self, x: &[f64]) -> Result<Jet3> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let jet = self.jet_unchecked(x)?;
        let min_eigenvalue = jet.min_eigenvalue();
        if !(min_eigenvalue > 0.0) {
            return Err(Error::NotConvexHere { point: x.to_vec(), min_eigenvalue });
        }
        Ok(jet)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok(self.jet_unchecked(x)?.value)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.eval_jet3(x)?.gradient)
    }
}

/// Jet of `x -> g(<a, x> + c)` given the derivatives of `g` at the argument.
fn ridge_jet(a: &[f64], d: Derivs1) -> Jet3 {
    let n = a.len();
    let av = DVector::from_column_slice(a);
    let outer = &av * av.transpose();
    Jet3 {
        value: d.f,
        gradient: &av * d.d1,
        hessian: &outer * d.d2,
        third: (0..n).map(|k| &outer * (d.d3 * a[k])).collect(),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `e^{x_1} + ... + e^{x_n}`
pub fn separable_exp(dim: usize) -> ConvexFunction {
    ConvexFunction::Separable(vec![OneDPiece::Exp { scale: 1.0, rate: 1.0 }; dim])
}

/// `e^{x_1 + 2 x_2} + e^{x_1} + |x|^2`: two non-orthogonal ridge directions,
/// so the inverse Hessian is not a Hessian.
pub fn mixed_exponential() -> ConvexFunction {
    ConvexFunction::ExpAffine {
        dim: 2,
        terms: vec![
            ExpTerm { coefficients: vec![1.0, 2.0], weight: 1.0 },
            ExpTerm { coefficients: vec![1.0, 0.0], weight: 1.0 },
        ],
        quadratic: 1.0,
    }
}
