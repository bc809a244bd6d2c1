//! Horizontal lifts of curves to the frame bundle of the Hessian metric,
//! tangency of orthonormal frames to the orthogonal-columns set, and
//! recovery of a global orthogonal characteristic frame.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcspace::ConvexFunction;
use crate::linalg::{givens, max_abs, offdiag_max, rotation2, sym_eigen};
use crate::matgeo::{cluster_sorted, q_map};
use crate::propi::christoffel_from_jet;

/// A smooth curve piece on the parameter interval `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Line { origin: Vec<f64>, direction: Vec<f64>, start: f64, end: f64 },
    Arc { center: Vec<f64>, radius: f64, start: f64, end: f64 },
}

impl Piece {
    fn bounds(&self) -> (f64, f64) {
        match self {
            Piece::Line { start, end, .. } | Piece::Arc { start, end, .. } => (*start, *end),
        }
    }

    fn point(&self, t: f64) -> Vec<f64> {
        match self {
            Piece::Line { origin, direction, .. } => origin.iter().zip(direction).map(|(o, d)| o + t * d).collect(),
            Piece::Arc { center, radius, .. } => {
                let mut p = center.clone();
                p[0] += radius * t.cos();
                p[1] += radius * t.sin();
                p
            }
        }
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        match self {
            Piece::Line { direction, .. } => direction.clone(),
            Piece::Arc { center, radius, .. } => {
                let mut v = vec![0.0; center.len()];
                v[0] = -radius * t.sin();
                v[1] = radius * t.cos();
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    /// `origin + t * direction` for `t` in `[0, t_max]`.
    Segment { origin: Vec<f64>, direction: Vec<f64>, t_max: f64 },
    /// Straight pieces through the points, each on a unit parameter interval.
    Polyline { points: Vec<Vec<f64>> },
    /// Circle arc in the first two coordinates, angle from `start` to `end`.
    Arc { center: Vec<f64>, radius: f64, start: f64, end: f64 },
}

impl CurveSpec {
    pub fn dim(&self) -> usize {
        match self {
            CurveSpec::Segment { origin, .. } => origin.len(),
            CurveSpec::Polyline { points } => points.first().map_or(0, |p| p.len()),
            CurveSpec::Arc { center, .. } => center.len(),
        }
    }

    fn pieces(&self) -> Result<Vec<Piece>> {
        match self {
            CurveSpec::Segment { origin, direction, t_max } => {
                if origin.len() != direction.len() {
                    return Err(Error::DimensionMismatch { expected: origin.len(), got: direction.len() });
                }
                if !(*t_max > 0.0) {
                    return Err(Error::InvalidSpec("segment needs t_max > 0".into()));
                }
                Ok(vec![Piece::Line { origin: origin.clone(), direction: direction.clone(), start: 0.0, end: *t_max }])
            }
            CurveSpec::Polyline { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidSpec("polyline needs at least two points".into()));
                }
                let n = points[0].len();
                let mut out = Vec::new();
                for (i, w) in points.windows(2).enumerate() {
                    if w[1].len() != n {
                        return Err(Error::DimensionMismatch { expected: n, got: w[1].len() });
                    }
                    let direction: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
                    // origin chosen so that the piece passes through w[0] at t = i
                    let origin: Vec<f64> = w[0].iter().zip(&direction).map(|(a, d)| a - i as f64 * d).collect();
                    out.push(Piece::Line { origin, direction, start: i as f64, end: i as f64 + 1.0 });
                }
                Ok(out)
            }
            CurveSpec::Arc { center, radius, start, end } => {
                if center.len() < 2 {
                    return Err(Error::InvalidSpec("arc needs dimension at least 2".into()));
                }
                if !(*radius > 0.0) || !(end > start) {
                    return Err(Error::InvalidSpec("arc needs radius > 0 and end > start".into()));
                }
                Ok(vec![Piece::Arc { center: center.clone(), radius: *radius, start: *start, end: *end }])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    pub step: f64,
    /// Rerun at half the step and compare end frames.
    pub check_halving: bool,
    pub tolerance: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions { step: 1e-3, check_halving: true, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub frame: DMatrix<f64>,
    /// `|A^T H A - I|`
    pub orthonormality: f64,
    /// `offdiag(A^T A)`
    pub c_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    pub samples: Vec<LiftSample>,
    pub orthonormality_drift: f64,
    pub c_drift: f64,
    /// End-frame difference against the half-step run, if performed.
    pub halving_difference: Option<f64>,
}

impl LiftResult {
    pub fn final_frame(&self) -> &DMatrix<f64> {
        &self.samples.last().expect("a lift has at least one sample").frame
    }
}

fn orthonormality_defect(f: &ConvexFunction, x: &[f64], a: &DMatrix<f64>) -> Result<f64> {
    let h = f.eval_jet3(x)?.hessian;
    Ok(max_abs(&(a.transpose() * h * a - DMatrix::identity(a.ncols(), a.ncols()))))
}

/// `(t, point, frame)` at every integrator step.
type Trajectory = Vec<(f64, Vec<f64>, DMatrix<f64>)>;

fn integrate(f: &ConvexFunction, pieces: &[Piece], a0: &DMatrix<f64>, step: f64) -> Result<Trajectory> {
    let rhs = |piece: &Piece, t: f64, a: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let x = piece.point(t);
        let jet = f.eval_jet3(&x).map_err(|e| match e {
            Error::OutOfDomain { .. } | Error::NotConvexHere { .. } => Error::CurveLeavesDomain { t },
            other => other,
        })?;
        let ch = christoffel_from_jet(&jet)?;
        let v = piece.velocity(t);
        let mut m = DMatrix::zeros(a.nrows(), a.nrows());
        for (vk, gk) in v.iter().zip(&ch.matrices) {
            m += gk * (0.5 * vk);
        }
        Ok(-(m * a))
    };
    let mut a = a0.clone();
    let first = &pieces[0];
    let (t0, _) = first.bounds();
    let mut out = vec![(t0, first.point(t0), a.clone())];
    for piece in pieces {
        let (start, end) = piece.bounds();
        let steps = ((end - start) / step).ceil().max(1.0) as usize;
        let h = (end - start) / steps as f64;
        for s in 0..steps {
            let t = start + h * s as f64;
            let k1 = rhs(piece, t, &a)?;
            let k2 = rhs(piece, t + 0.5 * h, &(&a + &k1 * (0.5 * h)))?;
            let k3 = rhs(piece, t + 0.5 * h, &(&a + &k2 * (0.5 * h)))?;
            let k4 = rhs(piece, t + h, &(&a + &k3 * h))?;
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let tn = if s + 1 == steps { end } else { t + h };
            out.push((tn, piece.point(tn), a.clone()));
        }
    }
    Ok(out)
}

/// Parallel transport of the frame `a0` along `curve` for the Levi-Civita
/// connection of the Hessian metric, `A' = -(sum_k v_k Gamma_k / 2) A`.
pub fn horizontal_lift(
    f: &ConvexFunction,
    curve: &CurveSpec,
    a0: &DMatrix<f64>,
    options: LiftOptions,
) -> Result<LiftResult> {
    let n = f.dim();
    if curve.dim() != n || a0.nrows() != n || a0.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: curve.dim() });
    }
    let pieces = curve.pieces()?;
    let start = pieces[0].point(pieces[0].bounds().0);
    let defect =
        orthonormality_defect(f, &start, a0).map_err(|_| Error::CurveLeavesDomain { t: pieces[0].bounds().0 })?;
    if !(defect < 1e-9) {
        return Err(Error::NotOrthonormalFrame { defect });
    }
    let path = integrate(f, &pieces, a0, options.step)?;
    let halving_difference = if options.check_halving {
        let fine = integrate(f, &pieces, a0, options.step / 2.0)?;
        let end = &path.last().expect("non-empty").2;
        let end_fine = &fine.last().expect("non-empty").2;
        let difference = max_abs(&(end - end_fine));
        let tolerance = options.tolerance * (1.0 + max_abs(end));
        if difference > tolerance {
            return Err(Error::IntegratorToleranceExceeded { difference, tolerance });
        }
        Some(difference)
    } else {
        None
    };
    let mut samples = Vec::with_capacity(path.len());
    for (t, point, frame) in path {
        let orthonormality = orthonormality_defect(f, &point, &frame)?;
        let c_drift = offdiag_max(&q_map(&frame));
        samples.push(LiftSample { t, point, frame, orthonormality, c_drift });
    }
    let orthonormality_drift = samples.iter().map(|s| s.orthonormality).fold(0.0, f64::max);
    let c_drift = samples.iter().map(|s| s.c_drift).fold(0.0, f64::max);
    Ok(LiftResult { samples, orthonormality_drift, c_drift, halving_difference })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCResidual {
    /// `max_k offdiag(A^T Gamma_k^T A + A^T Gamma_k A)`
    pub symmetric: f64,
    /// `max_k offdiag(A^T H_{,k} A)`
    pub reduced: f64,
}

/// Residual of the tangency condition for an orthonormal frame with
/// orthogonal columns, in both the Christoffel and the reduced form.
pub fn property_c_residual(f: &ConvexFunction, x: &[f64], a: &DMatrix<f64>) -> Result<PropertyCResidual> {
    let jet = f.eval_jet3(x)?;
    let n = jet.dim();
    let defect = max_abs(&(a.transpose() * &jet.hessian * a - DMatrix::identity(n, n)));
    if !(defect < 1e-9) {
        return Err(Error::NotOrthonormalFrame { defect });
    }
    let g = q_map(a);
    let c_defect = offdiag_max(&g) / max_abs(&g);
    if !(c_defect < 1e-9) {
        return Err(Error::NotInC { defect: c_defect });
    }
    let ch = christoffel_from_jet(&jet)?;
    let mut symmetric: f64 = 0.0;
    let mut reduced: f64 = 0.0;
    for (gk, tk) in ch.matrices.iter().zip(&jet.third) {
        let m = a.transpose() * gk * a;
        symmetric = symmetric.max(offdiag_max(&(m.transpose() + m)));
        reduced = reduced.max(offdiag_max(&(a.transpose() * tk * a)));
    }
    Ok(PropertyCResidual { symmetric, reduced })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCResult {
    pub found: bool,
    pub frame: DMatrix<f64>,
    pub residual: f64,
}

/// Minimize a function of an angle over `[lo, hi]`: uniform scan followed by
/// golden-section refinement around the best sample.
fn minimize_angle(obj: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, refinements: usize) -> (f64, f64) {
    let step = (hi - lo) / samples as f64;
    let (mut best, mut best_val) = (lo, obj(lo));
    for i in 1..samples {
        let a = lo + step * i as f64;
        let v = obj(a);
        if v < best_val {
            best = a;
            best_val = v;
        }
    }
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..refinements {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = obj(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best_val {
            best = x;
            best_val = v;
        }
    }
    (best, best_val)
}

/// Search orthonormal frames with orthogonal columns at `x` for one whose
/// lift is tangent to the orthogonal-columns set: along `velocity`, or along
/// every coordinate direction when `velocity` is `None`.
pub fn property_c_check(f: &ConvexFunction, x: &[f64], velocity: Option<&[f64]>) -> Result<PropertyCResult> {
    let jet = f.eval_jet3(x)?;
    let n = jet.dim();
    if let Some(v) = velocity {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let ch = christoffel_from_jet(&jet)?;
    // d/dt q(A) = -(A^T G^T A + A^T G A) / 2 for G = sum_k v_k Gamma_k
    let directions: Vec<DMatrix<f64>> = match velocity {
        Some(v) => {
            let mut g = DMatrix::zeros(n, n);
            for (vk, gk) in v.iter().zip(&ch.matrices) {
                g += gk * *vk;
            }
            vec![g]
        }
        None => ch.matrices.clone(),
    };
    let residual = |a: &DMatrix<f64>| -> f64 {
        directions
            .iter()
            .map(|g| {
                let m = a.transpose() * g * a;
                0.5 * offdiag_max(&(m.transpose() + m))
            })
            .fold(0.0, f64::max)
    };
    let (lambda, e) = sym_eigen(&jet.hessian);
    let base = &e * DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let clusters = cluster_sorted(lambda.as_slice(), 1e-6);
    let mut pairs = Vec::new();
    let mut offset = 0;
    for size in clusters {
        for i in offset..offset + size {
            for j in i + 1..offset + size {
                pairs.push((i, j));
            }
        }
        offset += size;
    }
    let mut frame = base;
    let mut best = residual(&frame);
    let (samples, sweeps) = if n == 2 { (2000, 1) } else { (360, 20) };
    for _ in 0..sweeps {
        let before = best;
        for &(i, j) in &pairs {
            let (angle, value) = minimize_angle(
                |a| residual(&(&frame * givens(n, i, j, a))),
                -FRAC_PI_2 / 2.0,
                FRAC_PI_2 / 2.0,
                samples,
                30,
            );
            if value < best {
                frame = &frame * givens(n, i, j, angle);
                best = value;
            }
        }
        if before - best <= 1e-15 {
            break;
        }
    }
    Ok(PropertyCResult { found: best < 1e-7, frame, residual: best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// Common characteristic frame, if one was found.
    pub frame: Option<DMatrix<f64>>,
    /// Objective at the eigenframe of the first sample.
    pub max_offdiag: f64,
    /// Best objective after optimization.
    pub optimized_min: f64,
    /// Frame attaining `optimized_min`.
    pub best_frame: DMatrix<f64>,
}

impl Recovery {
    /// For `n = 2`, the angle of the recovered frame modulo `pi/2`.
    pub fn angle(&self) -> Option<f64> {
        let b = self.frame.as_ref()?;
        (b.nrows() == 2).then(|| crate::jets2d::reduce_quarter(b[(1, 0)].atan2(b[(0, 0)])))
    }
}

const RECOVERY_TOL: f64 = 1e-6;

/// Look for a rotation `B` with `B^T H(x) B` diagonal at every sample.
///
/// The objective is the largest off-diagonal entry of `B^T H B` relative to
/// the largest entry of `H`, maximized over samples.
pub fn characteristic_recovery(f: &ConvexFunction, samples: &[Vec<f64>]) -> Result<Recovery> {
    let n = f.dim();
    if samples.is_empty() {
        return Ok(Recovery {
            frame: Some(DMatrix::identity(n, n)),
            max_offdiag: 0.0,
            optimized_min: 0.0,
            best_frame: DMatrix::identity(n, n),
        });
    }
    let hessians: Vec<DMatrix<f64>> =
        samples.iter().map(|x| f.eval_jet3(x).map(|j| &j.hessian / max_abs(&j.hessian))).collect::<Result<_>>()?;
    let objective = |b: &DMatrix<f64>| -> f64 {
        hessians.iter().map(|h| offdiag_max(&(b.transpose() * h * b))).fold(0.0, f64::max)
    };
    let b0 = sym_eigen(&hessians[0]).1;
    let max_offdiag = objective(&b0);
    let (best_frame, optimized_min) = if max_offdiag < RECOVERY_TOL {
        (b0, max_offdiag)
    } else {
        match n {
            1 => (b0, max_offdiag),
            2 => {
                let (a, v) = minimize_angle(|a| objective(&rotation2(a)), 0.0, FRAC_PI_2, 2000, 60);
                (rotation2(a), v)
            }
            3 => {
                let mut b = b0;
                let mut best = max_offdiag;
                for _ in 0..50 {
                    let before = best;
                    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                        let (a, v) =
                            minimize_angle(|a| objective(&(&b * givens(3, i, j, a))), -PI / 4.0, PI / 4.0, 360, 40);
                        if v < best {
                            b = &b * givens(3, i, j, a);
                            best = v;
                        }
                    }
                    if before - best <= 1e-14 {
                        break;
                    }
                }
                (b, best)
            }
            _ => hessians
                .iter()
                .map(|h| {
                    let b = sym_eigen(h).1;
                    let v = objective(&b);
                    (b, v)
                })
                .fold((b0.clone(), max_offdiag), |acc, c| if c.1 < acc.1 { c } else { acc }),
        }
    };
    let frame = (optimized_min < RECOVERY_TOL).then(|| best_frame.clone());
    Ok(Recovery { frame, max_offdiag, optimized_min, best_frame })
}

/// Sorted-eigenframe distance between two frames, up to column permutation and sign.
pub fn frame_distance_up_to_signs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // each column of a should match some column of b up to sign
    let mut worst: f64 = 0.0;
    for ca in a.column_iter() {
        let ca: DVector<f64> = ca.into_owned();
        let best = b.column_iter().map(|cb| (&ca - cb).amax().min((&ca + cb).amax())).fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{separable_exp, OneDPiece};

    #[test]
    fn flat_metric_keeps_frame() {
        let f = ConvexFunction::Quadratic { dim: 2, k: 1.0 };
        let a0 = DMatrix::identity(2, 2) * (0.5f64).sqrt();
        let curve = CurveSpec::Arc { center: vec![0.0, 0.0], radius: 1.0, start: 0.0, end: 1.0 };
        let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default()).unwrap();
        assert!(max_abs(&(r.final_frame() - &a0)) < 1e-15);
        assert!(r.orthonormality_drift < 1e-15);
    }

    #[test]
    fn exp_lift_has_closed_form() {
        let f = separable_exp(1);
        let curve = CurveSpec::Segment { origin: vec![0.0], direction: vec![1.0], t_max: 1.0 };
        let r = horizontal_lift(&f, &curve, &DMatrix::identity(1, 1), LiftOptions::default()).unwrap();
        assert!((r.final_frame()[(0, 0)] - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_orthonormal_start_is_rejected() {
        let f = separable_exp(1);
        let curve = CurveSpec::Segment { origin: vec![0.0], direction: vec![1.0], t_max: 1.0 };
        let r = horizontal_lift(&f, &curve, &DMatrix::from_element(1, 1, 2.0), LiftOptions::default());
        assert!(matches!(r, Err(Error::NotOrthonormalFrame { .. })));
    }

    #[test]
    fn lift_leaving_domain_fails() {
        let f = ConvexFunction::Separable(vec![OneDPiece::LogBarrier { slope: 1.0, offset: 0.0 }]);
        let curve = CurveSpec::Segment { origin: vec![1.0], direction: vec![-2.0], t_max: 1.0 };
        let a0 = DMatrix::from_element(1, 1, 2f64.sqrt());
        let r = horizontal_lift(&f, &curve, &a0, LiftOptions::default());
        assert!(matches!(r, Err(Error::CurveLeavesDomain { .. })));
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let (a, v) = minimize_angle(|a| (a - 0.3).powi(2), 0.0, 1.0, 50, 60);
        assert!((a - 0.3).abs() < 1e-7 && v < 1e-14);
    }
}
