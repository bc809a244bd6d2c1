//! Torus-invariant bivector fields on `R^n x T^n` and the Schouten bracket.
//!
//! Coordinates are ordered `(x_1..x_n, theta_1..theta_n)`. Coefficients
//! depend on `x` only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcspace::ConvexFunction;
use crate::linalg::spd_inverse;
use crate::propi::residual_from_jet;

#[derive(Debug, Clone, PartialEq)]
pub enum BivectorField {
    /// Constant antisymmetric coefficient matrix of size `2n`.
    Constant(DMatrix<f64>),
    /// `sum_jk g_jk d/dx_j ^ d/dtheta_k` with `g` the inverse Hessian of the potential.
    Kahler(ConvexFunction),
}

/// `sum_j d/dx_j ^ d/dtheta_j`
pub fn standard_bivector(n: usize) -> BivectorField {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        m[(j, n + j)] = 1.0;
        m[(n + j, j)] = -1.0;
    }
    BivectorField::Constant(m)
}

pub fn kahler_bivector(f: &ConvexFunction) -> BivectorField {
    BivectorField::Kahler(f.clone())
}

fn block(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(g);
    m.view_mut((n, 0), (n, n)).copy_from(&(-g));
    m
}

/// Coefficients and their first derivatives at a point of the base.
struct Frozen {
    value: DMatrix<f64>,
    /// `derivs[l]` is the derivative along coordinate `l` of the `2n` chart.
    derivs: Vec<DMatrix<f64>>,
}

fn inverse_hessian(f: &ConvexFunction, x: &[f64]) -> Result<DMatrix<f64>> {
    let jet = f.eval_jet3(x)?;
    spd_inverse(&jet.hessian).ok_or(Error::NotConvexHere { point: x.to_vec(), min_eigenvalue: jet.min_eigenvalue() })
}

impl BivectorField {
    /// Chart dimension `2n`.
    pub fn dim(&self) -> usize {
        match self {
            BivectorField::Constant(m) => m.nrows(),
            BivectorField::Kahler(f) => 2 * f.dim(),
        }
    }

    pub fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            BivectorField::Constant(m) => Ok(m.clone()),
            BivectorField::Kahler(f) => Ok(block(&inverse_hessian(f, x)?)),
        }
    }

    fn frozen(&self, x: &[f64]) -> Result<Frozen> {
        let m = self.dim();
        match self {
            BivectorField::Constant(c) => Ok(Frozen { value: c.clone(), derivs: vec![DMatrix::zeros(m, m); m] }),
            BivectorField::Kahler(f) => {
                let jet = f.eval_jet3(x)?;
                let g = spd_inverse(&jet.hessian)
                    .ok_or(Error::NotConvexHere { point: x.to_vec(), min_eigenvalue: jet.min_eigenvalue() })?;
                let mut derivs: Vec<DMatrix<f64>> = jet.third.iter().map(|tk| block(&-(&g * tk * &g))).collect();
                derivs.extend(std::iter::repeat_n(DMatrix::zeros(m, m), m / 2));
                Ok(Frozen { value: block(&g), derivs })
            }
        }
    }

    /// Same as `frozen` but with derivatives by central differences of the
    /// coefficients, one Richardson level.
    fn frozen_fd(&self, x: &[f64], h: f64) -> Result<Frozen> {
        let m = self.dim();
        let value = self.at(x)?;
        let mut derivs = Vec::with_capacity(m);
        for l in 0..m {
            if l >= m / 2 || matches!(self, BivectorField::Constant(_)) {
                derivs.push(DMatrix::zeros(m, m));
                continue;
            }
            let central = |s: f64| -> Result<DMatrix<f64>> {
                let mut p = x.to_vec();
                let mut q = x.to_vec();
                p[l] += s;
                q[l] -= s;
                Ok((self.at(&p)? - self.at(&q)?) / (2.0 * s))
            };
            let coarse = central(h)?;
            let fine = central(h / 2.0)?;
            derivs.push((fine * 4.0 - coarse) / 3.0);
        }
        Ok(Frozen { value, derivs })
    }
}

/// Totally antisymmetric three-index tensor on the `2n` chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Trivector {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl Trivector {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.entries[(a * self.dim + b) * self.dim + c]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn bracket(p: &Frozen, q: &Frozen) -> Trivector {
    let m = p.value.nrows();
    // sum_l P^{al} d_l Q^{bc} + Q^{al} d_l P^{bc}
    let term = |a: usize, b: usize, c: usize| -> f64 {
        (0..m).map(|l| p.value[(a, l)] * q.derivs[l][(b, c)] + q.value[(a, l)] * p.derivs[l][(b, c)]).sum()
    };
    let mut entries = vec![0.0; m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                entries[(a * m + b) * m + c] = term(a, b, c) + term(b, c, a) + term(c, a, b);
            }
        }
    }
    Trivector { dim: m, entries }
}

fn check_pair(p: &BivectorField, q: &BivectorField, x: &[f64]) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if 2 * x.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim() / 2, got: x.len() });
    }
    Ok(())
}

/// Schouten bracket of two bivector fields at base point `x` (any `theta`).
pub fn schouten_bracket(p: &BivectorField, q: &BivectorField, x: &[f64]) -> Result<Trivector> {
    check_pair(p, q, x)?;
    Ok(bracket(&p.frozen(x)?, &q.frozen(x)?))
}

/// The same bracket with coefficient derivatives by finite differences.
pub fn schouten_bracket_fd(p: &BivectorField, q: &BivectorField, x: &[f64], h: f64) -> Result<Trivector> {
    check_pair(p, q, x)?;
    Ok(bracket(&p.frozen_fd(x, h)?, &q.frozen_fd(x, h)?))
}

/// `(d_Pi A)^{i_0..i_p} = sum_s (-1)^s Pi^{i_s l} d_l A^{i_0..^i_s..i_p}` for a
/// constant bivector; `derivs[l]` holds the flattened `d_l A` of degree `p`.
fn constant_differential(pi: &DMatrix<f64>, derivs: &[Vec<f64>], p: usize) -> Vec<f64> {
    let m = pi.nrows();
    let size = m.pow(p as u32 + 1);
    let mut out = vec![0.0; size];
    let mut idx = vec![0usize; p + 1];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut r = flat;
        for d in (0..=p).rev() {
            idx[d] = r % m;
            r /= m;
        }
        let mut total = 0.0;
        for s in 0..=p {
            let rest = idx.iter().enumerate().filter(|(t, _)| *t != s).fold(0, |acc, (_, &i)| acc * m + i);
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            for (l, dl) in derivs.iter().enumerate() {
                let c = pi[(idx[s], l)];
                if c != 0.0 {
                    total += sign * c * dl[rest];
                }
            }
        }
        *slot = total;
    }
    out
}

/// `d_Pi [Pi, P]` for the standard `Pi`, with the outer derivative taken by
/// central differences; it vanishes because `d_Pi` squares to zero.
pub fn graded_jacobi_defect(f: &ConvexFunction, x: &[f64], h: f64) -> Result<f64> {
    let n = f.dim();
    let pi = standard_bivector(n);
    let p = kahler_bivector(f);
    let field = |y: &[f64]| schouten_bracket(&pi, &p, y).map(|t| t.entries);
    let m = 2 * n;
    let mut derivs = Vec::with_capacity(m);
    for l in 0..m {
        if l >= n {
            derivs.push(vec![0.0; m * m * m]);
            continue;
        }
        let central = |s: f64| -> Result<Vec<f64>> {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[l] += s;
            b[l] -= s;
            Ok(field(&a)?.iter().zip(field(&b)?).map(|(u, v)| (u - v) / (2.0 * s)).collect())
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        derivs.push(fine.iter().zip(coarse).map(|(fi, co)| (4.0 * fi - co) / 3.0).collect());
    }
    let BivectorField::Constant(pm) = pi else { unreachable!() };
    Ok(constant_differential(&pm, &derivs, 3).iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonRow {
    pub point: Vec<f64>,
    pub bracket: f64,
    pub residual: f64,
    /// Max-abs difference between the analytic and finite-difference brackets.
    pub fd_gap: f64,
    /// Max over `i, j, k` of `|[Pi, P]^{theta_i x_j theta_k} - R[j][i][k]|`.
    pub identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    pub rows: Vec<PoissonRow>,
    pub max_bracket: f64,
    pub max_residual: f64,
    pub max_fd_gap: f64,
    pub max_identity_gap: f64,
}

/// Compare `[Pi, P]` with the inverse-Hessian residual at every sample.
pub fn commuting_equiv_check(f: &ConvexFunction, samples: &[Vec<f64>], fd_step: f64) -> Result<PoissonReport> {
    let n = f.dim();
    let pi = standard_bivector(n);
    let p = kahler_bivector(f);
    let mut rows = Vec::with_capacity(samples.len());
    for x in samples {
        let b = schouten_bracket(&pi, &p, x)?;
        let fd = schouten_bracket_fd(&pi, &p, x, fd_step)?;
        let r = residual_from_jet(&f.eval_jet3(x)?)?;
        let fd_gap = b.entries.iter().zip(&fd.entries).fold(0.0, |m: f64, (u, v)| m.max((u - v).abs()));
        let mut identity_gap: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    identity_gap = identity_gap.max((b.get(n + i, j, n + k) - r.get(j, i, k)).abs());
                }
            }
        }
        rows.push(PoissonRow { point: x.clone(), bracket: b.max_abs(), residual: r.max_abs, fd_gap, identity_gap });
    }
    let fold = |sel: fn(&PoissonRow) -> f64| rows.iter().map(sel).fold(0.0, f64::max);
    Ok(PoissonReport {
        max_bracket: fold(|r| r.bracket),
        max_residual: fold(|r| r.residual),
        max_fd_gap: fold(|r| r.fd_gap),
        max_identity_gap: fold(|r| r.identity_gap),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{mixed_exponential, separable_exp};

    #[test]
    fn standard_bivector_commutes_with_itself() {
        let pi = standard_bivector(2);
        assert_eq!(schouten_bracket(&pi, &pi, &[0.0, 0.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn one_dimensional_bracket_vanishes() {
        let f = separable_exp(1);
        let b = schouten_bracket(&standard_bivector(1), &kahler_bivector(&f), &[0.4]).unwrap();
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn kahler_bivector_is_poisson() {
        let p = kahler_bivector(&mixed_exponential());
        assert!(schouten_bracket(&p, &p, &[0.2, -0.1]).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn constant_differential_matches_bracket_with_constant_pi() {
        let f = mixed_exponential();
        let x = [0.2, 0.1];
        let pi = standard_bivector(2);
        let p = kahler_bivector(&f);
        let frozen = p.frozen(&x).unwrap();
        let flat: Vec<Vec<f64>> = frozen.derivs.iter().map(|d| d.transpose().as_slice().to_vec()).collect();
        let BivectorField::Constant(pm) = &pi else { unreachable!() };
        let d = constant_differential(pm, &flat, 2);
        let b = schouten_bracket(&pi, &p, &x).unwrap();
        let gap = d.iter().zip(&b.entries).fold(0.0, |m: f64, (u, v)| m.max((u - v).abs()));
        assert!(gap < 1e-14, "{gap}");
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let b = schouten_bracket(&standard_bivector(2), &kahler_bivector(&mixed_exponential()), &[0.1, 0.3]).unwrap();
        for (a, bb, c) in [(0, 2, 3), (2, 1, 3), (1, 2, 0)] {
            assert!((b.get(a, bb, c) + b.get(bb, a, c)).abs() < 1e-15);
            assert!((b.get(a, bb, c) - b.get(bb, c, a)).abs() < 1e-15);
        }
    }
}
