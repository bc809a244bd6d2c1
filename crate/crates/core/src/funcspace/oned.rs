//! Strictly convex functions of one variable with derivatives to order three.

use crate::error::{Error, Result};

/// Value and first three derivatives of a one-variable function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs1 {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl std::ops::Add for Derivs1 {
    type Output = Derivs1;
    fn add(self, o: Derivs1) -> Derivs1 {
        Derivs1 { f: self.f + o.f, d1: self.d1 + o.d1, d2: self.d2 + o.d2, d3: self.d3 + o.d3 }
    }
}

impl Derivs1 {
    pub const ZERO: Derivs1 = Derivs1 { f: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };

    fn scaled(self, c: f64) -> Derivs1 {
        Derivs1 { f: c * self.f, d1: c * self.d1, d2: c * self.d2, d3: c * self.d3 }
    }
}

/// A log-barrier term switched on away from the gluing point of a handle.
///
/// Adds `weight * e^{-1/s} * L(end - t)` with `s = t - p` and
/// `L(a) = a (log a - 1) / 2`, so the profile derivative blows up at `end`
/// while all derivatives still vanish at `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEnd {
    pub end: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OneDPiece {
    /// `k t^2`
    Quadratic {
        k: f64,
    },
    /// `scale * e^{rate t}`
    Exp {
        scale: f64,
        rate: f64,
    },
    /// `coefficient * t^degree`, degree even and at least 2
    Power {
        degree: u32,
        coefficient: f64,
    },
    /// `a (log a - 1) / 2` with `a = slope * t + offset > 0`
    LogBarrier {
        slope: f64,
        offset: f64,
    },
    /// `k t^2 + mu * Psi(t - p)` plus an optional barrier end, where
    /// `Psi(s) = e^{-1/s} s^4` for `s > 0` and zero otherwise.
    FlatGlued {
        k: f64,
        p: f64,
        mu: f64,
        barrier: Option<BarrierEnd>,
    },
    Sum(Vec<OneDPiece>),
    /// Legendre transform of the inner piece, evaluated by 1D inversion.
    Conjugate(Box<OneDPiece>),
}

/// `Psi(s) = e^{-1/s} s^4` and its first three derivatives.
pub fn flat_bump(s: f64) -> Derivs1 {
    // e^{-1/s} is exactly zero in double precision below this.
    if s <= 1e-3 {
        return Derivs1::ZERO;
    }
    let e = (-1.0 / s).exp();
    Derivs1 {
        f: e * s.powi(4),
        d1: e * s * s * (4.0 * s + 1.0),
        d2: e * (12.0 * s * s + 6.0 * s + 1.0),
        d3: e * (24.0 * s.powi(3) + 18.0 * s * s + 6.0 * s + 1.0) / (s * s),
    }
}

/// `chi(s) = e^{-1/s}` for `s > 0`, zero otherwise.
fn flat_step(s: f64) -> Derivs1 {
    if s <= 1e-3 {
        return Derivs1::ZERO;
    }
    let e = (-1.0 / s).exp();
    Derivs1 {
        f: e,
        d1: e / (s * s),
        d2: e * (1.0 - 2.0 * s) / s.powi(4),
        d3: e * (6.0 * s * s - 6.0 * s + 1.0) / s.powi(6),
    }
}

fn log_barrier(alpha: f64, slope: f64) -> Derivs1 {
    let l = alpha.ln();
    Derivs1 {
        f: 0.5 * alpha * (l - 1.0),
        d1: 0.5 * slope * l,
        d2: 0.5 * slope * slope / alpha,
        d3: -0.5 * slope.powi(3) / (alpha * alpha),
    }
}

fn product(a: Derivs1, b: Derivs1) -> Derivs1 {
    Derivs1 {
        f: a.f * b.f,
        d1: a.d1 * b.f + a.f * b.d1,
        d2: a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2,
        d3: a.d3 * b.f + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.f * b.d3,
    }
}

impl OneDPiece {
    /// Open interval of definition; infinite ends allowed.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            OneDPiece::Quadratic { .. } | OneDPiece::Exp { .. } | OneDPiece::Power { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            OneDPiece::LogBarrier { slope, offset } => {
                let root = -offset / slope;
                if *slope > 0.0 {
                    (root, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, root)
                }
            }
            OneDPiece::FlatGlued { barrier, .. } => match barrier {
                Some(b) => (f64::NEG_INFINITY, b.end),
                None => (f64::NEG_INFINITY, f64::INFINITY),
            },
            OneDPiece::Sum(parts) => parts.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), p| {
                let (a, b) = p.interval();
                (lo.max(a), hi.min(b))
            }),
            OneDPiece::Conjugate(inner) => {
                let (lo, hi) = inner.interval();
                (inner.derivative_limit(lo, false), inner.derivative_limit(hi, true))
            }
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.interval();
        t > lo && t < hi
    }

    /// Limit of the first derivative as `t` approaches `end` from inside.
    /// `upper` selects the side of approach.
    pub fn derivative_limit(&self, end: f64, upper: bool) -> f64 {
        let inf = if upper { f64::INFINITY } else { f64::NEG_INFINITY };
        let (lo, hi) = self.interval();
        let at_own_end = if upper { end >= hi } else { end <= lo };
        if !at_own_end && end.is_finite() {
            return self.derivs_unchecked(end).d1;
        }
        match self {
            OneDPiece::Quadratic { .. } | OneDPiece::Power { .. } => inf,
            OneDPiece::Exp { scale, rate } => {
                // scale * rate * e^{rate t}: zero at one end, unbounded at the other
                if (*rate > 0.0) == upper {
                    inf.abs() * (scale * rate).signum()
                } else {
                    0.0
                }
            }
            OneDPiece::LogBarrier { .. } | OneDPiece::FlatGlued { .. } => inf,
            OneDPiece::Sum(parts) => parts.iter().map(|p| p.derivative_limit(end, upper)).sum(),
            OneDPiece::Conjugate(inner) => {
                let (ilo, ihi) = inner.interval();
                if upper {
                    ihi
                } else {
                    ilo
                }
            }
        }
    }

    /// Derivatives without an interval check; callers guarantee membership.
    pub fn derivs_unchecked(&self, t: f64) -> Derivs1 {
        match self {
            OneDPiece::Quadratic { k } => Derivs1 { f: k * t * t, d1: 2.0 * k * t, d2: 2.0 * k, d3: 0.0 },
            OneDPiece::Exp { scale, rate } => {
                let e = scale * (rate * t).exp();
                Derivs1 { f: e, d1: rate * e, d2: rate * rate * e, d3: rate.powi(3) * e }
            }
            OneDPiece::Power { degree, coefficient } => {
                let d = *degree as i32;
                let c = *coefficient;
                let df = d as f64;
                let pw = |e: i32| if e < 0 { 0.0 } else { t.powi(e) };
                Derivs1 {
                    f: c * pw(d),
                    d1: c * df * pw(d - 1),
                    d2: c * df * (df - 1.0) * pw(d - 2),
                    d3: c * df * (df - 1.0) * (df - 2.0) * pw(d - 3),
                }
            }
            OneDPiece::LogBarrier { slope, offset } => log_barrier(slope * t + offset, *slope),
            OneDPiece::FlatGlued { k, p, mu, barrier } => {
                let quad = Derivs1 { f: k * t * t, d1: 2.0 * k * t, d2: 2.0 * k, d3: 0.0 };
                let mut out = quad + flat_bump(t - p).scaled(*mu);
                if let Some(b) = barrier {
                    let term = product(flat_step(t - p), log_barrier(b.end - t, -1.0));
                    out = out + term.scaled(b.weight);
                }
                out
            }
            OneDPiece::Sum(parts) => parts.iter().fold(Derivs1::ZERO, |acc, p| acc + p.derivs_unchecked(t)),
            OneDPiece::Conjugate(inner) => match conjugate_derivs(inner, t) {
                Ok(d) => d,
                Err(_) => Derivs1 { f: f64::NAN, d1: f64::NAN, d2: f64::NAN, d3: f64::NAN },
            },
        }
    }

    /// Derivatives with an interval check.
    pub fn derivs(&self, t: f64) -> Result<Derivs1> {
        if !self.contains(t) {
            return Err(Error::OutOfDomain { point: vec![t] });
        }
        match self {
            OneDPiece::Conjugate(inner) => conjugate_derivs(inner, t),
            _ => Ok(self.derivs_unchecked(t)),
        }
    }

    /// Solve `f'(t) = slope` on the interval of definition.
    pub fn inverse_derivative(&self, slope: f64) -> Result<f64> {
        let (lo, hi) = self.interval();
        let dlo = self.derivative_limit(lo, false);
        let dhi = self.derivative_limit(hi, true);
        if !(slope > dlo && slope < dhi) {
            return Err(Error::OutOfDomain { point: vec![slope] });
        }
        // Bracket the root; infinite ends are expanded geometrically.
        let start = if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            0.0
        };
        let g = |t: f64| self.derivs_unchecked(t).d1 - slope;
        let (mut a, mut b) = (start, start);
        let mut step = 1.0;
        while g(a) > 0.0 {
            a = if lo.is_finite() { 0.5 * (a + lo) } else { a - step };
            step *= 2.0;
            if step > 1e300 || (lo.is_finite() && a - lo < 1e-300) {
                return Err(Error::NoConvergence { residual: g(a), last: vec![a] });
            }
        }
        step = 1.0;
        while g(b) < 0.0 {
            b = if hi.is_finite() { 0.5 * (b + hi) } else { b + step };
            step *= 2.0;
            if step > 1e300 || (hi.is_finite() && hi - b < 1e-300) {
                return Err(Error::NoConvergence { residual: g(b), last: vec![b] });
            }
        }
        // Safeguarded Newton inside [a, b].
        let mut t = 0.5 * (a + b);
        for _ in 0..200 {
            let d = self.derivs_unchecked(t);
            let r = d.d1 - slope;
            if r == 0.0 {
                return Ok(t);
            }
            if r > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let newton = t - r / d.d2;
            let next = if newton > a && newton < b && d.d2 > 0.0 { newton } else { 0.5 * (a + b) };
            if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) || b - a <= 1e-16 * (1.0 + t.abs()) {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

fn conjugate_derivs(inner: &OneDPiece, s: f64) -> Result<Derivs1> {
    let t = inner.inverse_derivative(s)?;
    let d = inner.derivs_unchecked(t);
    Ok(Derivs1 { f: t * s - d.f, d1: t, d2: 1.0 / d.d2, d3: -d.d3 / d.d2.powi(3) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(piece: &OneDPiece, t: f64) {
        let h = 1e-4;
        let a = piece.derivs(t - h).unwrap();
        let b = piece.derivs(t + h).unwrap();
        let c = piece.derivs(t).unwrap();
        let scale = 1.0 + c.d1.abs() + c.d2.abs() + c.d3.abs();
        assert!(((b.f - a.f) / (2.0 * h) - c.d1).abs() < 1e-6 * scale, "d1 at {t}");
        assert!(((b.d1 - a.d1) / (2.0 * h) - c.d2).abs() < 1e-6 * scale, "d2 at {t}");
        assert!(((b.d2 - a.d2) / (2.0 * h) - c.d3).abs() < 1e-5 * scale, "d3 at {t}");
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let pieces = vec![
            OneDPiece::Exp { scale: 1.5, rate: -0.7 },
            OneDPiece::Power { degree: 4, coefficient: 1.0 / 12.0 },
            OneDPiece::LogBarrier { slope: -1.0, offset: 0.0 },
            OneDPiece::FlatGlued { k: 1.0, p: 0.2, mu: 2.0, barrier: Some(BarrierEnd { end: 1.2, weight: 1.0 }) },
            OneDPiece::Conjugate(Box::new(OneDPiece::Exp { scale: 1.0, rate: 1.0 })),
        ];
        for p in &pieces {
            let (lo, hi) = p.interval();
            for t in [-0.9, -0.3, 0.35, 0.6, 0.9, 1.1] {
                if t > lo + 1e-2 && t < hi - 1e-2 {
                    fd_check(p, t);
                }
            }
        }
    }

    #[test]
    fn flat_bump_vanishes_at_gluing_point() {
        assert_eq!(flat_bump(0.0), Derivs1::ZERO);
        assert_eq!(flat_bump(-1.0), Derivs1::ZERO);
        let tiny = flat_bump(0.02);
        assert!(tiny.d3.abs() < 1e-18);
        assert!(flat_bump(0.5).d2 > 0.0);
    }

    #[test]
    fn exp_conjugate_is_y_log_y_minus_y() {
        let c = OneDPiece::Conjugate(Box::new(OneDPiece::Exp { scale: 1.0, rate: 1.0 }));
        assert_eq!(c.interval(), (0.0, f64::INFINITY));
        for y in [0.3_f64, 1.0, 2.5] {
            let d = c.derivs(y).unwrap();
            assert!((d.f - (y * y.ln() - y)).abs() < 1e-13);
            assert!((d.d2 - 1.0 / y).abs() < 1e-12);
        }
        assert!(c.derivs(-1.0).is_err());
    }

    #[test]
    fn barrier_end_gives_unbounded_slope() {
        let p = OneDPiece::FlatGlued { k: 1.0, p: 0.0, mu: 0.0, barrier: Some(BarrierEnd { end: 1.0, weight: 1.0 }) };
        assert_eq!(p.derivative_limit(1.0, true), f64::INFINITY);
        let c = OneDPiece::Conjugate(Box::new(p));
        let (lo, hi) = c.interval();
        assert!(lo == f64::NEG_INFINITY && hi == f64::INFINITY);
    }
}
