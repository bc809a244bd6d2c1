//! Central finite-difference jets with one level of Richardson extrapolation.
//!
//! This is the independent oracle for the analytic derivative paths; nothing
//! outside tests and checks should depend on it.

use nalgebra::{DMatrix, DVector};

use super::Jet3;
use crate::error::{Error, Result};

/// Steps for orders one and two (`low`) and for order three (`third`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub low: f64,
    pub third: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { low: 1e-3, third: 5e-3 }
    }
}

impl FdSteps {
    pub fn uniform(h: f64) -> Self {
        FdSteps { low: h, third: h }
    }
}

struct Stencil<'a, F> {
    f: &'a F,
    x: &'a [f64],
}

impl<F: Fn(&[f64]) -> Option<f64>> Stencil<'_, F> {
    fn at(&self, shifts: &[(usize, f64)]) -> Result<f64> {
        let mut p = self.x.to_vec();
        for &(i, d) in shifts {
            p[i] += d;
        }
        (self.f)(&p).ok_or_else(|| Error::StencilOutOfDomain { point: self.x.to_vec() })
    }

    fn gradient(&self, i: usize, h: f64, base: &[(usize, f64)]) -> Result<f64> {
        let mut plus = base.to_vec();
        plus.push((i, h));
        let mut minus = base.to_vec();
        minus.push((i, -h));
        Ok((self.at(&plus)? - self.at(&minus)?) / (2.0 * h))
    }

    fn hessian(&self, i: usize, j: usize, h: f64, base: &[(usize, f64)]) -> Result<f64> {
        let with = |extra: &[(usize, f64)]| {
            let mut s = base.to_vec();
            s.extend_from_slice(extra);
            self.at(&s)
        };
        if i == j {
            Ok((with(&[(i, h)])? - 2.0 * with(&[])? + with(&[(i, -h)])?) / (h * h))
        } else {
            Ok((with(&[(i, h), (j, h)])? - with(&[(i, h), (j, -h)])? - with(&[(i, -h), (j, h)])?
                + with(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h))
        }
    }

    fn third(&self, i: usize, j: usize, k: usize, h: f64) -> Result<f64> {
        Ok((self.hessian(i, j, h, &[(k, h)])? - self.hessian(i, j, h, &[(k, -h)])?) / (2.0 * h))
    }
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Finite-difference jet of `f` at `x`; `f` returns `None` off its domain.
///
/// Uses stencils of radius `2h`; the third-order tensor is symmetrized over
/// all index permutations.
pub fn finite_difference_jet3<F>(f: F, x: &[f64], steps: FdSteps) -> Result<Jet3>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = x.len();
    let st = Stencil { f: &f, x };
    let value = st.at(&[])?;
    let h = steps.low;
    let mut gradient = DVector::zeros(n);
    let mut hessian = DMatrix::zeros(n, n);
    for i in 0..n {
        gradient[i] = richardson(st.gradient(i, h, &[])?, st.gradient(i, h / 2.0, &[])?);
        for j in i..n {
            let v = richardson(st.hessian(i, j, h, &[])?, st.hessian(i, j, h / 2.0, &[])?);
            hessian[(i, j)] = v;
            hessian[(j, i)] = v;
        }
    }
    let h3 = steps.third;
    let mut raw = vec![vec![vec![0.0; n]; n]; n];
    for (i, plane) in raw.iter_mut().enumerate() {
        for (j, row) in plane.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = richardson(st.third(i, j, k, h3)?, st.third(i, j, k, h3 / 2.0)?);
            }
        }
    }
    let mut third = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let perms = [raw[i][j][k], raw[i][k][j], raw[j][i][k], raw[j][k][i], raw[k][i][j], raw[k][j][i]];
                third[k][(i, j)] = perms.iter().sum::<f64>() / 6.0;
            }
        }
    }
    Ok(Jet3 { value, gradient, hessian, third })
}
