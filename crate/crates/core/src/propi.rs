//! Whether the inverse Hessian is itself a Hessian, and the equivalent
//! symmetry conditions on Christoffel matrices and commutators.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::funcspace::{ConvexFunction, Jet3};
use crate::linalg::{commutator, max_abs};

/// Antisymmetrized derivative of the inverse Hessian,
/// `R[i][j][k] = d_k (H^{-1})_{ij} - d_j (H^{-1})_{ik}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyIResidual {
    pub entries: Vec<Vec<Vec<f64>>>,
    pub max_abs: f64,
}

impl PropertyIResidual {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[i][j][k]
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn factor(jet: &Jet3) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(jet.hessian.clone()).ok_or_else(|| Error::NotConvexHere {
        point: jet.gradient.as_slice().to_vec(),
        min_eigenvalue: jet.min_eigenvalue(),
    })
}

/// Residual from a jet, using `d_k H^{-1} = -H^{-1} H_{,k} H^{-1}` with a
/// single factorization.
pub fn residual_from_jet(jet: &Jet3) -> Result<PropertyIResidual> {
    let n = jet.dim();
    let chol = factor(jet)?;
    let hinv = chol.inverse();
    // g[k] = H^{-1} H_{,k} H^{-1} = -d_k H^{-1}
    let g: Vec<DMatrix<f64>> = jet.third.iter().map(|tk| chol.solve(tk) * &hinv).collect();
    let mut entries = vec![vec![vec![0.0; n]; n]; n];
    let mut worst: f64 = 0.0;
    for (i, plane) in entries.iter_mut().enumerate() {
        for (j, row) in plane.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = g[j][(i, k)] - g[k][(i, j)];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(PropertyIResidual { entries, max_abs: worst })
}

pub fn property_i_residual(f: &ConvexFunction, x: &[f64]) -> Result<PropertyIResidual> {
    residual_from_jet(&f.eval_jet3(x)?)
}

/// Christoffel matrices `Gamma_k = H^{-1} H_{,k}` and their antisymmetric parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSet {
    pub matrices: Vec<DMatrix<f64>>,
    /// `S_k = Gamma_k - Gamma_k^T`
    pub defects: Vec<DMatrix<f64>>,
    pub max_defect: f64,
    /// Max-abs entry of `H^{-1}`.
    pub inverse_hessian_norm: f64,
}

impl ChristoffelSet {
    /// Levi-Civita symbols of the Hessian metric, `Gamma_k / 2`.
    pub fn levi_civita(&self) -> Vec<DMatrix<f64>> {
        self.matrices.iter().map(|g| g * 0.5).collect()
    }
}

pub fn christoffel_from_jet(jet: &Jet3) -> Result<ChristoffelSet> {
    let chol = factor(jet)?;
    let matrices: Vec<DMatrix<f64>> = jet.third.iter().map(|tk| chol.solve(tk)).collect();
    let defects: Vec<DMatrix<f64>> = matrices.iter().map(|g| g - g.transpose()).collect();
    let max_defect = defects.iter().map(max_abs).fold(0.0, f64::max);
    Ok(ChristoffelSet { matrices, defects, max_defect, inverse_hessian_norm: max_abs(&chol.inverse()) })
}

pub fn christoffel(f: &ConvexFunction, x: &[f64]) -> Result<ChristoffelSet> {
    christoffel_from_jet(&f.eval_jet3(x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    Zero,
    NonZero,
    Indeterminate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Zero => "ZERO",
            Classification::NonZero => "NONZERO",
            Classification::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub zero: f64,
    pub nonzero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { zero: 1e-9, nonzero: 1e-3 }
    }
}

impl Tolerances {
    pub fn classify(&self, value: f64) -> Classification {
        self.classify_scaled(value, 1.0)
    }

    /// As `classify`, with the zero threshold multiplied by `scale`.
    pub fn classify_scaled(&self, value: f64, scale: f64) -> Classification {
        if value < self.zero * scale {
            Classification::Zero
        } else if value > self.nonzero {
            Classification::NonZero
        } else {
            Classification::Indeterminate
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivRow {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Christoffel defect `max_k |S_k|`.
    pub defect: f64,
    /// `max_k |[H^{-1}, H_{,k}]|`
    pub commutator: f64,
    pub classes: [Classification; 3],
}

impl EquivRow {
    pub fn agree(&self) -> bool {
        let definite: Vec<_> = self.classes.iter().filter(|c| **c != Classification::Indeterminate).collect();
        definite.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivReport {
    pub rows: Vec<EquivRow>,
    pub indeterminate: usize,
}

impl EquivReport {
    pub fn all_zero(&self) -> bool {
        self.rows.iter().all(|r| r.classes.iter().all(|c| *c == Classification::Zero))
    }

    pub fn any_nonzero(&self) -> bool {
        self.rows.iter().any(|r| r.classes.iter().all(|c| *c == Classification::NonZero))
    }
}

/// Evaluate the three residual families on every sample and require them to
/// classify alike; a ZERO/NONZERO clash is an error. The zero threshold of
/// the defect and commutator scales with `|H^{-1}|`, which bounds their roundoff.
pub fn symmetry_equiv_check(f: &ConvexFunction, samples: &[Vec<f64>], tol: Tolerances) -> Result<EquivReport> {
    let mut rows = Vec::with_capacity(samples.len());
    let mut indeterminate = 0;
    for x in samples {
        let jet = f.eval_jet3(x)?;
        let residual = residual_from_jet(&jet)?.max_abs;
        let ch = christoffel_from_jet(&jet)?;
        let defect = ch.max_defect;
        let hinv = factor(&jet)?.inverse();
        let commutator = jet.third.iter().map(|tk| max_abs(&commutator(&hinv, tk))).fold(0.0, f64::max);
        let scale = ch.inverse_hessian_norm;
        let classes =
            [tol.classify(residual), tol.classify_scaled(defect, scale), tol.classify_scaled(commutator, scale)];
        let row = EquivRow { point: x.clone(), residual, defect, commutator, classes };
        if !row.agree() {
            return Err(Error::EquivalenceViolation {
                point: x.clone(),
                detail: format!("residual {residual:e}, defect {defect:e}, commutator {commutator:e}"),
            });
        }
        if classes.contains(&Classification::Indeterminate) {
            indeterminate += 1;
        }
        rows.push(row);
    }
    Ok(EquivReport { rows, indeterminate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanReport {
    /// `[H^{-1}, H_{,k}]` per coordinate.
    pub commutators: Vec<DMatrix<f64>>,
    pub max_commutator: f64,
    pub max_defect: f64,
    pub agree: bool,
}

/// Commutators of `H^{-1}` with the derivative matrices, compared entrywise
/// with the Christoffel defects they must equal.
pub fn cartan_subalgebra_check(f: &ConvexFunction, x: &[f64]) -> Result<CartanReport> {
    let jet = f.eval_jet3(x)?;
    let ch = christoffel_from_jet(&jet)?;
    let hinv = factor(&jet)?.inverse();
    let commutators: Vec<DMatrix<f64>> = jet.third.iter().map(|tk| commutator(&hinv, tk)).collect();
    let max_commutator = commutators.iter().map(max_abs).fold(0.0, f64::max);
    let gap = commutators.iter().zip(&ch.defects).map(|(c, s)| max_abs(&(c - s))).fold(0.0, f64::max);
    let scale = 1.0 + max_commutator;
    Ok(CartanReport { agree: gap <= 1e-10 * scale, commutators, max_commutator, max_defect: ch.max_defect })
}
