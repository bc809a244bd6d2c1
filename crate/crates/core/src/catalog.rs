//! Named functions used by the check suites and the command line.

use std::f64::consts::FRAC_PI_6;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::funcspace::{
    mixed_exponential, separable_exp, AffineMap, ConvexFunction, Domain, ExpTerm, OneDPiece, Polytope,
};
use crate::handles::{build_handle_family, FlatBump, Handle, PolytopeWithHandles};
use crate::linalg::{givens, rotation2};

#[derive(Debug, Clone)]
pub struct Entry {
    pub name: &'static str,
    pub function: ConvexFunction,
    /// Sampling domain; `None` means the function's natural domain.
    pub domain: Option<Domain>,
    /// Whether the inverse Hessian is a Hessian, known by construction.
    pub inverse_is_hessian: bool,
}

/// `e^{t_1} + e^{2 t_2}` with characteristic axes at angle `theta`.
pub fn rotated_exp(theta: f64) -> ConvexFunction {
    let inner = ConvexFunction::Separable(vec![
        OneDPiece::Exp { scale: 1.0, rate: 1.0 },
        OneDPiece::Exp { scale: 1.0, rate: 2.0 },
    ]);
    ConvexFunction::rotated_by_angle(theta, inner)
}

/// Unit square core with two handles at `pi/6` to each other: one along
/// `e_1` and one along `(cos pi/6, sin pi/6)`, both on primary interval `(1, 2)`.
pub fn two_handle_domain() -> PolytopeWithHandles {
    let (s, c) = FRAC_PI_6.sin_cos();
    let core = Polytope::new(
        2,
        vec![
            AffineMap::new(vec![-1.0, 0.0], 1.0),
            AffineMap::new(vec![-c, -s], 1.0),
            AffineMap::new(vec![1.0, 0.0], 1.0),
            AffineMap::new(vec![0.0, 1.0], 1.5),
            AffineMap::new(vec![0.0, -1.0], 1.5),
        ],
    )
    .with_bounds(vec![(-1.0, 1.0), (-1.5, 1.5)]);
    let first =
        Handle { frame: DMatrix::identity(2, 2), p: 1.0, end: Some(2.0), face: Polytope::from_box(&[(-1.0, -0.2)]) };
    let second =
        Handle { frame: rotation2(FRAC_PI_6), p: 1.0, end: Some(2.0), face: Polytope::from_box(&[(0.3, 1.0)]) };
    PolytopeWithHandles { core, handles: vec![first, second] }
}

/// Glued family on [`two_handle_domain`] with `k = 1` and the same flat
/// bump amplitude on both handles.
pub fn two_handle_family(amplitude: f64) -> Result<ConvexFunction> {
    build_handle_family(two_handle_domain(), 1.0, &[FlatBump::new(amplitude), FlatBump::new(amplitude)])
}

pub fn builtin() -> Vec<Entry> {
    let so3 = givens(3, 0, 1, 0.4) * givens(3, 1, 2, -0.7) * givens(3, 0, 2, 1.1);
    let mixed3 = ConvexFunction::Separable(vec![
        OneDPiece::Exp { scale: 1.0, rate: 1.0 },
        OneDPiece::Sum(vec![OneDPiece::Power { degree: 4, coefficient: 1.0 / 12.0 }, OneDPiece::Quadratic { k: 1.0 }]),
        OneDPiece::LogBarrier { slope: 1.0, offset: 0.0 },
    ]);
    let square = Domain::Box { intervals: vec![(-1.0, 1.0), (-1.0, 1.0)] };
    vec![
        Entry {
            name: "quadratic",
            function: ConvexFunction::Quadratic { dim: 2, k: 1.0 },
            domain: None,
            inverse_is_hessian: true,
        },
        Entry { name: "separable-exp", function: separable_exp(2), domain: None, inverse_is_hessian: true },
        Entry {
            name: "separable-mixed-3d",
            function: mixed3.clone(),
            domain: Some(Domain::Box { intervals: vec![(-2.0, 2.0), (-2.0, 2.0), (0.05, 4.0)] }),
            inverse_is_hessian: true,
        },
        Entry {
            name: "rotated-exp-30",
            function: rotated_exp(FRAC_PI_6),
            domain: Some(Domain::Box { intervals: vec![(-1.5, 1.5), (-1.5, 1.5)] }),
            inverse_is_hessian: true,
        },
        Entry {
            name: "rotated-mixed-3d",
            function: ConvexFunction::Rotated { matrix: so3.clone(), inner: Box::new(mixed3) },
            domain: Some(Domain::Box { intervals: vec![(-1.5, 1.5), (-1.5, 1.5), (-1.5, 1.5)] }),
            inverse_is_hessian: true,
        },
        Entry {
            name: "orthogonal-ridges",
            function: ConvexFunction::ExpAffine {
                dim: 2,
                terms: vec![
                    ExpTerm { coefficients: vec![1.0, 1.0], weight: 1.0 },
                    ExpTerm { coefficients: vec![1.0, -1.0], weight: 1.0 },
                ],
                quadratic: 0.0,
            },
            domain: None,
            inverse_is_hessian: true,
        },
        Entry {
            name: "two-handle",
            function: two_handle_family(2.0).expect("the two-handle instance is valid"),
            domain: None,
            inverse_is_hessian: true,
        },
        Entry {
            name: "mixed-exponential",
            function: mixed_exponential(),
            domain: Some(square.clone()),
            inverse_is_hessian: false,
        },
        Entry {
            name: "three-ridges",
            function: ConvexFunction::ExpAffine {
                dim: 2,
                terms: vec![
                    ExpTerm { coefficients: vec![1.0, 0.0], weight: 1.0 },
                    ExpTerm { coefficients: vec![0.0, 1.0], weight: 1.0 },
                    ExpTerm { coefficients: vec![1.0, 1.0], weight: 1.0 },
                ],
                quadratic: 0.0,
            },
            domain: Some(square),
            inverse_is_hessian: false,
        },
    ]
}

impl Entry {
    pub fn samples(&self, count: usize, radius: f64) -> Vec<Vec<f64>> {
        match &self.domain {
            Some(d) => d.sample_filtered(count, radius, |x| self.function.contains(x)),
            None => self.function.sample(count, radius),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_handle_domain_is_valid() {
        assert!(two_handle_domain().validate().is_ok());
    }

    #[test]
    fn entries_sample_fully() {
        for e in builtin() {
            assert_eq!(e.samples(50, 5.0).len(), 50, "{}", e.name);
        }
    }
}
