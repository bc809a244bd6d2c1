//! Numerical checks for convex functions whose inverse Hessian is again a
//! Hessian: residuals, Christoffel symmetry, planar jet identities, frame
//! geometry, horizontal lifts, Legendre duality, glued handle families and
//! the Schouten bracket on torus charts.

// `!(v > 0.0)` deliberately rejects NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod connection;
pub mod error;
pub mod funcspace;
pub mod handles;
pub mod jets2d;
pub mod legendre;
pub mod linalg;
pub mod matgeo;
pub mod poisson;
pub mod propi;

pub use error::{Error, Result};
pub use funcspace::{ConvexFunction, Domain, Jet3, OneDPiece};
