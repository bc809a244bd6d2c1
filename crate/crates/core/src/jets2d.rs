//! Planar 3-jets: the quadric and cubic obstructions and the constancy of
//! the characteristic direction.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::funcspace::{ConvexFunction, Jet3};

/// Second and third derivatives of a function of two variables at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2D {
    pub chi: f64,
    pub tau: f64,
    pub zeta: f64,
    pub upsilon: f64,
    pub nu: f64,
    pub omega: f64,
    pub xi: f64,
}

impl Jet2D {
    pub fn from_jet(jet: &Jet3) -> Result<Self> {
        if jet.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: jet.dim() });
        }
        Ok(Jet2D {
            chi: jet.hessian[(0, 0)],
            tau: jet.hessian[(0, 1)],
            zeta: jet.hessian[(1, 1)],
            upsilon: jet.t(0, 0, 0),
            nu: jet.t(0, 0, 1),
            omega: jet.t(0, 1, 1),
            xi: jet.t(1, 1, 1),
        })
    }

    pub fn at(f: &ConvexFunction, x: &[f64]) -> Result<Self> {
        Self::from_jet(&f.eval_jet3(x)?)
    }

    pub fn determinant(&self) -> f64 {
        self.chi * self.zeta - self.tau * self.tau
    }

    pub fn quadrics(&self) -> (f64, f64) {
        let Jet2D { chi, tau, zeta, upsilon, nu, omega, xi } = *self;
        ((zeta - chi) * nu + tau * (upsilon - omega), (zeta - chi) * omega + tau * (nu - xi))
    }

    pub fn cubics(&self) -> (f64, f64) {
        let Jet2D { chi, tau, zeta, upsilon, nu, omega, xi } = *self;
        let d = self.determinant();
        let c1 = xi * d - zeta * (nu * zeta + chi * xi - 2.0 * tau * omega) + nu * d
            - tau * (upsilon * zeta + chi * omega - 2.0 * tau * nu);
        let c2 = -omega * d + tau * (nu * zeta + chi * xi - 2.0 * tau * omega) - upsilon * d
            + chi * (upsilon * zeta + chi * omega - 2.0 * tau * nu);
        (c1, c2)
    }

    /// `(zeta - chi, tau)`; its direction fixes the eigenframe of the Hessian.
    /// Largest second and third derivative entries.
    pub fn scales(&self) -> (f64, f64) {
        let h = self.chi.abs().max(self.tau.abs()).max(self.zeta.abs());
        let t = [self.upsilon, self.nu, self.omega, self.xi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (h, t)
    }

    pub fn slope_vector(&self) -> (f64, f64) {
        (self.zeta - self.chi, self.tau)
    }

    /// Angle of the eigenframe in `[0, pi/2)`, or `None` when the Hessian is
    /// isotropic to relative precision `1e-9`.
    pub fn characteristic_angle(&self) -> Option<f64> {
        let (a, b) = self.slope_vector();
        let scale = self.chi.abs().max(self.zeta.abs()).max(self.tau.abs());
        if a.hypot(b) <= 1e-9 * scale {
            return None;
        }
        Some(reduce_quarter(0.5 * (2.0 * self.tau).atan2(self.chi - self.zeta)))
    }
}

/// Representative of an angle modulo `pi/2` in `[0, pi/2)`.
pub fn reduce_quarter(theta: f64) -> f64 {
    let r = theta.rem_euclid(FRAC_PI_2);
    if r >= FRAC_PI_2 {
        0.0
    } else {
        r
    }
}

/// Distance between two directions modulo `pi/2`, in `[0, pi/4]`.
pub fn quarter_distance(a: f64, b: f64) -> f64 {
    let d = reduce_quarter(a - b);
    d.min(FRAC_PI_2 - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub point: Vec<f64>,
    pub angle: Option<f64>,
    pub quadrics: (f64, f64),
    pub cubics: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub rows: Vec<SlopeRow>,
    /// Max over sample pairs of `|sin|` of the angle difference modulo `pi/2`.
    pub spread: f64,
    pub base_point_hits: usize,
    pub max_quadric: f64,
    pub max_cubic: f64,
    /// Quadrics over `|H| |T|` and cubics over `|H|^2 |T|`, maximized over rows.
    pub max_relative_quadric: f64,
    pub max_relative_cubic: f64,
}

impl SlopeReport {
    /// Common angle, from the first sample off the base-point locus.
    pub fn angle(&self) -> Option<f64> {
        self.rows.iter().find_map(|r| r.angle)
    }
}

/// Characteristic angle at every sample, skipping isotropic points.
pub fn slope_constancy_check(f: &ConvexFunction, samples: &[Vec<f64>]) -> Result<SlopeReport> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let mut rows = Vec::with_capacity(samples.len());
    let (mut rel_q, mut rel_c): (f64, f64) = (0.0, 0.0);
    for x in samples {
        let j = Jet2D::at(f, x)?;
        let (q, c) = (j.quadrics(), j.cubics());
        let (h, t) = j.scales();
        if h * t > 0.0 {
            rel_q = rel_q.max(q.0.abs().max(q.1.abs()) / (h * t));
            rel_c = rel_c.max(c.0.abs().max(c.1.abs()) / (h * h * t));
        }
        rows.push(SlopeRow { point: x.clone(), angle: j.characteristic_angle(), quadrics: q, cubics: c });
    }
    let angles: Vec<f64> = rows.iter().filter_map(|r| r.angle).collect();
    let mut spread: f64 = 0.0;
    for (i, a) in angles.iter().enumerate() {
        for b in &angles[i + 1..] {
            spread = spread.max(quarter_distance(*a, *b).sin());
        }
    }
    let max_quadric = rows.iter().map(|r| r.quadrics.0.abs().max(r.quadrics.1.abs())).fold(0.0, f64::max);
    let max_cubic = rows.iter().map(|r| r.cubics.0.abs().max(r.cubics.1.abs())).fold(0.0, f64::max);
    Ok(SlopeReport {
        base_point_hits: rows.len() - angles.len(),
        rows,
        spread,
        max_quadric,
        max_cubic,
        max_relative_quadric: rel_q,
        max_relative_cubic: rel_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> Jet2D {
        Jet2D { chi: 2.0, tau: 0.3, zeta: 1.1, upsilon: 0.7, nu: -0.2, omega: 0.5, xi: 1.3 }
    }

    #[test]
    fn cubics_are_combinations_of_quadrics() {
        let j = generic();
        let (q1, q2) = j.quadrics();
        let (c1, c2) = j.cubics();
        assert!((c1 - (-j.zeta * q1 + j.tau * q2)).abs() < 1e-12);
        assert!((c2 - (j.tau * q1 - j.chi * q2)).abs() < 1e-12);
    }

    #[test]
    fn isotropic_hessian_has_no_angle() {
        let j = Jet2D { chi: 1.0, tau: 0.0, zeta: 1.0, ..generic() };
        assert_eq!(j.characteristic_angle(), None);
    }

    #[test]
    fn quarter_distance_identifies_perpendicular_directions() {
        assert!(quarter_distance(0.1, 0.1 + FRAC_PI_2) < 1e-15);
        assert!((quarter_distance(0.0, std::f64::consts::FRAC_PI_4) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
