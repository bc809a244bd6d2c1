//! Legendre transform: Newton inversion of the gradient map, conjugate jets
//! by the chain rule, and the image of a polytope with handles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcspace::{ConvexFunction, Jet3, DEFAULT_RADIUS};
use crate::handles::{HandleFamily, PolytopeWithHandles};
use crate::linalg::{max_abs, spd_inverse, symmetrize};
use crate::propi::residual_from_jet;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePoint {
    /// Point with `grad phi(x) = y`.
    pub x: Vec<f64>,
    /// `phi*(y) = <x, y> - phi(x)`
    pub value: f64,
    pub iterations: usize,
    /// Final max-abs gradient residual.
    pub residual: f64,
}

/// Solve `grad phi(x) = y` by damped Newton on `phi(x) - <y, x>`, starting
/// from `x_init`. Steps are halved until they stay in the domain and either
/// satisfy the Armijo condition or reduce the gradient residual.
pub fn legendre_point(f: &ConvexFunction, y: &[f64], x_init: &[f64]) -> Result<LegendrePoint> {
    let n = f.dim();
    if y.len() != n || x_init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if y.len() != n { y.len() } else { x_init.len() } });
    }
    if !f.contains(x_init) {
        return Err(Error::OutOfDomain { point: x_init.to_vec() });
    }
    let yv = DVector::from_column_slice(y);
    let tol = 1e-12 * (1.0 + yv.amax());
    let mut x = DVector::from_column_slice(x_init);
    let mut jet = f.eval_jet3(x.as_slice())?;
    let objective = |j: &Jet3, x: &DVector<f64>| j.value - yv.dot(x);
    let mut polish = 0;
    for it in 0..MAX_ITERATIONS {
        let g = &jet.gradient - &yv;
        let r = g.amax();
        if r <= tol {
            polish += 1;
            if polish > 2 || r == 0.0 {
                return Ok(finish(x, jet, &yv, it));
            }
        }
        let Some(hinv) = spd_inverse(&jet.hessian) else {
            return Err(Error::NoConvergence { residual: r, last: x.as_slice().to_vec() });
        };
        let d = -(&hinv * &g);
        let slope = g.dot(&d);
        let f0 = objective(&jet, &x);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &d * t;
            if f.contains(cand.as_slice()) {
                if let Ok(cj) = f.eval_jet3(cand.as_slice()) {
                    let armijo = objective(&cj, &cand) <= f0 + 1e-4 * t * slope;
                    let smaller = (&cj.gradient - &yv).amax() < r;
                    if armijo || smaller {
                        accepted = Some((cand, cj));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, cj)) => {
                x = cand;
                jet = cj;
            }
            None if r <= tol => return Ok(finish(x, jet, &yv, it)),
            None => return Err(Error::NoConvergence { residual: r, last: x.as_slice().to_vec() }),
        }
    }
    let r = (&jet.gradient - &yv).amax();
    if r <= 1e-9 * (1.0 + yv.amax()) {
        return Ok(finish(x, jet, &yv, MAX_ITERATIONS));
    }
    Err(Error::NoConvergence { residual: r, last: x.as_slice().to_vec() })
}

fn finish(x: DVector<f64>, jet: Jet3, y: &DVector<f64>, iterations: usize) -> LegendrePoint {
    LegendrePoint {
        value: y.dot(&x) - jet.value,
        residual: (&jet.gradient - y).amax(),
        x: x.as_slice().to_vec(),
        iterations,
    }
}

/// Jet of the conjugate at `y = grad phi(x)`, from the jet of `phi` at `x`.
///
/// `H*(y) = H(x)^{-1}` and `dH*/dy_m = -sum_k H^{-1} H_{,k} H^{-1} (H^{-1})_{km}`.
pub fn conjugate_jet(x: &[f64], jet: &Jet3) -> Result<Jet3> {
    let n = jet.dim();
    let hinv = spd_inverse(&jet.hessian)
        .ok_or(Error::NotConvexHere { point: x.to_vec(), min_eigenvalue: jet.min_eigenvalue() })?;
    let g: Vec<DMatrix<f64>> = jet.third.iter().map(|tk| &hinv * tk * &hinv).collect();
    let mut third = Vec::with_capacity(n);
    for m in 0..n {
        let mut slice = DMatrix::zeros(n, n);
        for (k, gk) in g.iter().enumerate() {
            slice -= gk * hinv[(k, m)];
        }
        third.push(symmetrize(&slice));
    }
    let xv = DVector::from_column_slice(x);
    Ok(Jet3 { value: jet.gradient.dot(&xv) - jet.value, gradient: xv, hessian: hinv, third })
}

/// The Legendre transform of a function, evaluated pointwise by Newton.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericConjugate {
    pub primal: Box<ConvexFunction>,
    /// Starting point for Newton when no better seed is known.
    pub seed: Vec<f64>,
}

impl NumericConjugate {
    pub fn new(primal: ConvexFunction) -> Self {
        let n = primal.dim();
        let seed = primal.sample(1, DEFAULT_RADIUS).pop().unwrap_or_else(|| vec![0.0; n]);
        NumericConjugate { primal: Box::new(primal), seed }
    }

    pub fn dim(&self) -> usize {
        self.primal.dim()
    }

    /// Solve for the primal point at `y`.
    pub fn preimage(&self, y: &[f64]) -> Result<LegendrePoint> {
        if let ConvexFunction::HandleFamily(h) = self.primal.as_ref() {
            if let Some(x) = h.gradient_preimage(y) {
                return legendre_point(&self.primal, y, &x);
            }
        }
        legendre_point(&self.primal, y, &self.seed)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim() && y.iter().all(|v| v.is_finite()) && self.preimage(y).is_ok()
    }

    pub fn jet(&self, y: &[f64]) -> Result<Jet3> {
        let sol = self.preimage(y)?;
        let jet = self.primal.eval_jet3(&sol.x)?;
        let mut out = conjugate_jet(&sol.x, &jet)?;
        out.value = sol.value;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub primal_residual: f64,
    pub conjugate_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub tolerance: f64,
    /// Whether the primal has the property on every sample.
    pub precondition: bool,
    pub passed: bool,
}

/// For each sample `x`, compare the inverse-Hessian residual of `phi` at `x`
/// with that of `phi*` at `grad phi(x)`; the conjugate jet comes from a
/// fresh Newton solve, not from `x` itself.
pub fn conjugate_propi_invariance(f: &ConvexFunction, samples: &[Vec<f64>]) -> Result<InvarianceReport> {
    let tolerance = 1e-7;
    let conj = NumericConjugate::new(f.clone());
    let mut rows = Vec::with_capacity(samples.len());
    for x in samples {
        let jet = f.eval_jet3(x)?;
        let y = jet.gradient.as_slice().to_vec();
        let cjet = conj.jet(&y)?;
        rows.push(InvarianceRow {
            primal_residual: residual_from_jet(&jet)?.max_abs,
            conjugate_residual: residual_from_jet(&cjet)?.max_abs,
            x: x.clone(),
            y,
        });
    }
    let precondition = rows.iter().all(|r| r.primal_residual < 1e-9);
    let passed = precondition && rows.iter().all(|r| r.conjugate_residual < tolerance);
    Ok(InvarianceReport { rows, tolerance, precondition, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionResult {
    /// `grad phi*(grad phi(x))`, recomputed by Newton.
    pub x_back: Vec<f64>,
    pub point_error: f64,
    /// `|phi(x) - phi**(x)|`
    pub value_error: f64,
}

/// A start point for [`involution`] near `x`: shrunk towards the origin when
/// that stays in the domain, otherwise nudged.
pub fn nearby_seed(f: &ConvexFunction, x: &[f64]) -> Vec<f64> {
    let seed: Vec<f64> = x.iter().map(|v| 0.97 * v).collect();
    if f.contains(&seed) {
        seed
    } else {
        x.iter().map(|v| v + 1e-3).collect()
    }
}

/// Apply the transform twice at `x`; `seed` starts both solves away from the answer.
pub fn involution(f: &ConvexFunction, x: &[f64], seed: &[f64]) -> Result<InvolutionResult> {
    let y = f.gradient(x)?;
    let back = legendre_point(f, y.as_slice(), seed)?;
    let point_error = back.x.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let conj = ConvexFunction::Conjugate(NumericConjugate { primal: Box::new(f.clone()), seed: seed.to_vec() });
    let y_seed = f.gradient(seed)?;
    let twice = legendre_point(&conj, x, y_seed.as_slice())?;
    let value_error = (f.value(x)? - twice.value).abs();
    Ok(InvolutionResult { x_back: back.x, point_error, value_error })
}

/// Max-abs difference between `H(x)^{-1}` and a finite-difference Jacobian
/// of the inverse gradient map at `grad phi(x)`.
pub fn hessian_duality_error(f: &ConvexFunction, x: &[f64], h: f64) -> Result<f64> {
    let jet = f.eval_jet3(x)?;
    let n = x.len();
    let y = jet.gradient.clone();
    let solve = |shift: &DVector<f64>| -> Result<DVector<f64>> {
        let yy = &y + shift;
        Ok(DVector::from_vec(legendre_point(f, yy.as_slice(), x)?.x))
    };
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let column = |step: f64| -> Result<DVector<f64>> {
            let mut e = DVector::zeros(n);
            e[j] = step;
            Ok((solve(&e)? - solve(&(-e))?) / (2.0 * step))
        };
        // the gradient image is open and its boundary may be closer than `h`:
        // shrink the step until the stencil fits and two estimates agree
        let mut step = h;
        let mut previous: Option<DVector<f64>> = None;
        let col = loop {
            let last = step <= 1e-4 * h;
            match column(step).and_then(|coarse| Ok((column(step / 2.0)? * 4.0 - coarse) / 3.0)) {
                Ok(c) => {
                    let settled = previous.as_ref().is_some_and(|p| (&c - p).amax() <= 1e-7 * (1.0 + c.amax()));
                    if settled || last {
                        break c;
                    }
                    previous = Some(c);
                }
                Err(Error::NoConvergence { .. } | Error::OutOfDomain { .. }) if !last => previous = None,
                Err(e) => return Err(e),
            }
            step /= 4.0;
        };
        jac.set_column(j, &col);
    }
    let hinv = spd_inverse(&jet.hessian)
        .ok_or(Error::NotConvexHere { point: x.to_vec(), min_eigenvalue: jet.min_eigenvalue() })?;
    Ok(max_abs(&(jac - hinv)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainImage {
    pub descriptor: PolytopeWithHandles,
    pub cloud: Vec<Vec<f64>>,
    /// Per handle, the largest deviation of image displacements along the
    /// primary direction from that direction.
    pub primary_errors: Vec<f64>,
    /// Fraction of the cloud inside the descriptor.
    pub coverage: f64,
    pub passed: bool,
}

/// Image of the domain under the gradient map: a point cloud, the analytic
/// descriptor, and a check that each handle's primary is preserved.
pub fn legendre_domain_image(f: &HandleFamily, count: usize) -> Result<DomainImage> {
    let func = ConvexFunction::HandleFamily(f.clone());
    let descriptor = f.image_domain();
    let mut cloud = Vec::with_capacity(count);
    for x in func.sample(count, DEFAULT_RADIUS) {
        cloud.push(func.gradient(&x)?.as_slice().to_vec());
    }
    let inside = cloud.iter().filter(|y| descriptor.contains(y)).count();
    let coverage = if cloud.is_empty() { 1.0 } else { inside as f64 / cloud.len() as f64 };
    let mut primary_errors = Vec::new();
    for (l, h) in f.domain.handles.iter().enumerate() {
        let b = h.primary();
        let len = h.end.unwrap_or(h.p + DEFAULT_RADIUS) - h.p;
        let delta = 0.05 * len;
        let mut worst: f64 = 0.0;
        for x in f.sample_handle(l, 40, DEFAULT_RADIUS) {
            let x2: Vec<f64> = x.iter().zip(b.iter()).map(|(a, d)| a + delta * d).collect();
            if f.domain.region(&x2) != Some(crate::handles::Region::Handle(l)) {
                continue;
            }
            let d = func.gradient(&x2)? - func.gradient(&x)?;
            let dn = d.norm();
            if dn > 0.0 {
                worst = worst.max((d / dn - &b).amax());
            }
        }
        primary_errors.push(worst);
    }
    let passed = coverage == 1.0 && primary_errors.iter().all(|e| *e < 1e-9);
    Ok(DomainImage { descriptor, cloud, primary_errors, coverage, passed })
}
