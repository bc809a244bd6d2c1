//! JSON form of functions and domains: `{"kind": ..., "dim": n, "params": {...}}`.
//!
//! Function kinds and their params:
//!
//! - `quadratic`: `{"k": 1.0}`
//! - `separable`: `{"pieces": [piece, ...]}`
//! - `rotated`: `{"matrix": [[..], ..], "inner": spec}` or, in the plane,
//!   `{"angle": t, "inner": spec}` which puts the characteristic axes at `t`
//! - `exp_affine`: `{"terms": [{"coefficients": [..], "weight": w}], "quadratic": c}`
//! - `custom`: `{"terms": [{"ridge": {"direction": [..], "shift": s, "piece": piece}}
//!   | {"quadratic_form": {"matrix": [[..]]}}]}`
//! - `handle_family`: `{"k": k, "core": polytope, "handles": [handle, ...]}`
//! - `conjugate`: `{"primal": spec}`
//!
//! A piece is tagged by `"kind"`: `quadratic {k}`, `exp {scale, rate}`,
//! `power {degree, coefficient}`, `log_barrier {slope, offset}`,
//! `sum {parts}`, `conjugate {inner}`. A polytope is
//! `{"maps": [{"normal": [..], "offset": c}], "bounds": [[lo, hi], ..]}` where
//! `null` bounds are infinite. A handle is `{"frame": [[..]] | "angle": t,
//! "p": p, "end": b | null, "face": polytope, "amplitude": mu,
//! "barrier_weight": w | null}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AffineMap, ConvexFunction, CustomTerm, Domain, ExpTerm, OneDPiece, Polytope};
use crate::error::{Error, Result};
use crate::handles::{build_handle_family, FlatBump, Handle, PolytopeWithHandles};
use crate::legendre::NumericConjugate;
use crate::linalg::rotation2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub kind: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceSpec {
    Quadratic { k: f64 },
    Exp { scale: f64, rate: f64 },
    Power { degree: u32, coefficient: f64 },
    LogBarrier { slope: f64, offset: f64 },
    Sum { parts: Vec<PieceSpec> },
    Conjugate { inner: Box<PieceSpec> },
}

impl PieceSpec {
    pub fn to_piece(&self) -> Result<OneDPiece> {
        Ok(match self {
            PieceSpec::Quadratic { k } => {
                positive("k", *k)?;
                OneDPiece::Quadratic { k: *k }
            }
            PieceSpec::Exp { scale, rate } => {
                positive("scale", *scale)?;
                if *rate == 0.0 {
                    return Err(Error::InvalidSpec("exp rate must be non-zero".into()));
                }
                OneDPiece::Exp { scale: *scale, rate: *rate }
            }
            PieceSpec::Power { degree, coefficient } => {
                if *degree < 2 || degree % 2 != 0 {
                    return Err(Error::InvalidSpec("power degree must be even and at least 2".into()));
                }
                positive("coefficient", *coefficient)?;
                OneDPiece::Power { degree: *degree, coefficient: *coefficient }
            }
            PieceSpec::LogBarrier { slope, offset } => {
                if *slope == 0.0 {
                    return Err(Error::InvalidSpec("log barrier slope must be non-zero".into()));
                }
                OneDPiece::LogBarrier { slope: *slope, offset: *offset }
            }
            PieceSpec::Sum { parts } => OneDPiece::Sum(parts.iter().map(|p| p.to_piece()).collect::<Result<_>>()?),
            PieceSpec::Conjugate { inner } => OneDPiece::Conjugate(Box::new(inner.to_piece()?)),
        })
    }

    pub fn from_piece(p: &OneDPiece) -> Result<Self> {
        Ok(match p {
            OneDPiece::Quadratic { k } => PieceSpec::Quadratic { k: *k },
            OneDPiece::Exp { scale, rate } => PieceSpec::Exp { scale: *scale, rate: *rate },
            OneDPiece::Power { degree, coefficient } => PieceSpec::Power { degree: *degree, coefficient: *coefficient },
            OneDPiece::LogBarrier { slope, offset } => PieceSpec::LogBarrier { slope: *slope, offset: *offset },
            OneDPiece::Sum(parts) => {
                PieceSpec::Sum { parts: parts.iter().map(PieceSpec::from_piece).collect::<Result<_>>()? }
            }
            OneDPiece::Conjugate(inner) => PieceSpec::Conjugate { inner: Box::new(PieceSpec::from_piece(inner)?) },
            OneDPiece::FlatGlued { .. } => {
                return Err(Error::InvalidSpec("glued profiles are described through their handle family".into()))
            }
        })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[Option<f64>; 2]>>,
}

fn interval_from(b: &[Option<f64>; 2]) -> (f64, f64) {
    (b[0].unwrap_or(f64::NEG_INFINITY), b[1].unwrap_or(f64::INFINITY))
}

fn interval_to(lo: f64, hi: f64) -> [Option<f64>; 2] {
    [lo.is_finite().then_some(lo), hi.is_finite().then_some(hi)]
}

impl PolytopeSpec {
    pub fn to_polytope(&self, dim: usize) -> Result<Polytope> {
        for m in &self.maps {
            if m.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.normal.len() });
            }
        }
        let mut p = Polytope::new(dim, self.maps.iter().map(|m| AffineMap::new(m.normal.clone(), m.offset)).collect());
        if let Some(b) = &self.bounds {
            if b.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
            }
            p = p.with_bounds(b.iter().map(interval_from).collect());
        }
        Ok(p)
    }

    pub fn from_polytope(p: &Polytope) -> Self {
        PolytopeSpec {
            maps: p.maps.iter().map(|m| MapSpec { normal: m.normal.clone(), offset: m.offset }).collect(),
            bounds: p.bounds.as_ref().map(|b| b.iter().map(|&(lo, hi)| interval_to(lo, hi)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub p: f64,
    pub end: Option<f64>,
    pub face: PolytopeSpec,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub barrier_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleFamilySpec {
    pub k: f64,
    pub core: PolytopeSpec,
    pub handles: Vec<HandleSpec>,
}

#[derive(Serialize, Deserialize)]
struct QuadraticParams {
    k: f64,
}

#[derive(Serialize, Deserialize)]
struct SeparableParams {
    pieces: Vec<PieceSpec>,
}

#[derive(Serialize, Deserialize)]
struct RotatedParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    inner: Spec,
}

#[derive(Serialize, Deserialize)]
struct ExpTermSpec {
    coefficients: Vec<f64>,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct ExpAffineParams {
    terms: Vec<ExpTermSpec>,
    #[serde(default)]
    quadratic: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CustomTermSpec {
    Ridge { direction: Vec<f64>, shift: f64, piece: PieceSpec },
    QuadraticForm { matrix: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
struct CustomParams {
    terms: Vec<CustomTermSpec>,
}

#[derive(Serialize, Deserialize)]
struct ConjugateParams {
    primal: Spec,
}

fn params<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::InvalidSpec(format!("{kind}: {e}")))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("spec types serialize")
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidSpec(format!("expected a {dim}x{dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn handle_frame(h: &HandleSpec, dim: usize) -> Result<DMatrix<f64>> {
    match (&h.frame, h.angle) {
        (Some(rows), None) => matrix_from_rows(rows, dim),
        (None, Some(theta)) if dim == 2 => Ok(rotation2(theta)),
        (None, None) if dim >= 1 => Ok(DMatrix::identity(dim, dim)),
        _ => Err(Error::InvalidSpec("handle needs either a frame or, in the plane, an angle".into())),
    }
}

impl HandleFamilySpec {
    pub fn domain(&self, dim: usize) -> Result<PolytopeWithHandles> {
        let core = self.core.to_polytope(dim)?;
        let handles = self
            .handles
            .iter()
            .map(|h| {
                Ok(Handle { frame: handle_frame(h, dim)?, p: h.p, end: h.end, face: h.face.to_polytope(dim - 1)? })
            })
            .collect::<Result<_>>()?;
        Ok(PolytopeWithHandles { core, handles })
    }

    pub fn bumps(&self) -> Vec<FlatBump> {
        self.handles.iter().map(|h| FlatBump { amplitude: h.amplitude, barrier_weight: h.barrier_weight }).collect()
    }

    pub fn build(&self, dim: usize) -> Result<ConvexFunction> {
        build_handle_family(self.domain(dim)?, self.k, &self.bumps())
    }
}

impl Spec {
    pub fn from_json(text: &str) -> Result<Spec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn to_function(&self) -> Result<ConvexFunction> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::InvalidSpec("dim must be positive".into()));
        }
        let kind = self.kind.as_str();
        let f = match kind {
            "quadratic" => {
                let p: QuadraticParams = params(kind, &self.params)?;
                positive("k", p.k)?;
                ConvexFunction::Quadratic { dim, k: p.k }
            }
            "separable" => {
                let p: SeparableParams = params(kind, &self.params)?;
                ConvexFunction::Separable(p.pieces.iter().map(|s| s.to_piece()).collect::<Result<_>>()?)
            }
            "rotated" => {
                let p: RotatedParams = params(kind, &self.params)?;
                let inner = p.inner.to_function()?;
                match (p.matrix, p.angle) {
                    (Some(rows), None) => {
                        let matrix = matrix_from_rows(&rows, dim)?;
                        if !crate::linalg::is_special_orthogonal(&matrix, 1e-10) {
                            return Err(Error::InvalidSpec("rotated: matrix must be in SO(n)".into()));
                        }
                        ConvexFunction::Rotated { matrix, inner: Box::new(inner) }
                    }
                    (None, Some(theta)) if dim == 2 => ConvexFunction::rotated_by_angle(theta, inner),
                    _ => return Err(Error::InvalidSpec("rotated: give a matrix, or an angle in the plane".into())),
                }
            }
            "exp_affine" => {
                let p: ExpAffineParams = params(kind, &self.params)?;
                for t in &p.terms {
                    if t.coefficients.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: t.coefficients.len() });
                    }
                    positive("weight", t.weight)?;
                }
                ConvexFunction::ExpAffine {
                    dim,
                    terms: p
                        .terms
                        .into_iter()
                        .map(|t| ExpTerm { coefficients: t.coefficients, weight: t.weight })
                        .collect(),
                    quadratic: p.quadratic,
                }
            }
            "custom" => {
                let p: CustomParams = params(kind, &self.params)?;
                let terms = p
                    .terms
                    .into_iter()
                    .map(|t| match t {
                        CustomTermSpec::Ridge { direction, shift, piece } => {
                            if direction.len() != dim {
                                return Err(Error::DimensionMismatch { expected: dim, got: direction.len() });
                            }
                            Ok(CustomTerm::Ridge { direction, shift, piece: piece.to_piece()? })
                        }
                        CustomTermSpec::QuadraticForm { matrix } => {
                            Ok(CustomTerm::QuadraticForm { matrix: matrix_from_rows(&matrix, dim)? })
                        }
                    })
                    .collect::<Result<_>>()?;
                ConvexFunction::Custom { dim, terms }
            }
            "handle_family" => {
                let p: HandleFamilySpec = params(kind, &self.params)?;
                p.build(dim)?
            }
            "conjugate" => {
                let p: ConjugateParams = params(kind, &self.params)?;
                ConvexFunction::Conjugate(NumericConjugate::new(p.primal.to_function()?))
            }
            other => return Err(Error::InvalidSpec(format!("unknown function kind '{other}'"))),
        };
        if f.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
        }
        Ok(f)
    }

    pub fn from_function(f: &ConvexFunction) -> Result<Spec> {
        let dim = f.dim();
        let (kind, params) = match f {
            ConvexFunction::Quadratic { k, .. } => ("quadratic", to_value(&QuadraticParams { k: *k })),
            ConvexFunction::Separable(pieces) => (
                "separable",
                to_value(&SeparableParams { pieces: pieces.iter().map(PieceSpec::from_piece).collect::<Result<_>>()? }),
            ),
            ConvexFunction::Rotated { matrix, inner } => (
                "rotated",
                to_value(&RotatedParams {
                    matrix: Some(matrix_rows(matrix)),
                    angle: None,
                    inner: Spec::from_function(inner)?,
                }),
            ),
            ConvexFunction::ExpAffine { terms, quadratic, .. } => (
                "exp_affine",
                to_value(&ExpAffineParams {
                    terms: terms
                        .iter()
                        .map(|t| ExpTermSpec { coefficients: t.coefficients.clone(), weight: t.weight })
                        .collect(),
                    quadratic: *quadratic,
                }),
            ),
            ConvexFunction::Custom { terms, .. } => {
                let terms = terms
                    .iter()
                    .map(|t| match t {
                        CustomTerm::Ridge { direction, shift, piece } => Ok(CustomTermSpec::Ridge {
                            direction: direction.clone(),
                            shift: *shift,
                            piece: PieceSpec::from_piece(piece)?,
                        }),
                        CustomTerm::QuadraticForm { matrix } => {
                            Ok(CustomTermSpec::QuadraticForm { matrix: matrix_rows(matrix) })
                        }
                    })
                    .collect::<Result<_>>()?;
                ("custom", to_value(&CustomParams { terms }))
            }
            ConvexFunction::HandleFamily(h) => {
                let handles = h
                    .domain
                    .handles
                    .iter()
                    .zip(&h.profiles)
                    .map(|(hd, prof)| match prof {
                        OneDPiece::FlatGlued { mu, barrier, .. } => Ok(HandleSpec {
                            frame: Some(matrix_rows(&hd.frame)),
                            angle: None,
                            p: hd.p,
                            end: hd.end,
                            face: PolytopeSpec::from_polytope(&hd.face),
                            amplitude: *mu,
                            barrier_weight: barrier.as_ref().map(|b| b.weight),
                        }),
                        _ => Err(Error::InvalidSpec("only primal handle families have a JSON form".into())),
                    })
                    .collect::<Result<_>>()?;
                (
                    "handle_family",
                    to_value(&HandleFamilySpec { k: h.k, core: PolytopeSpec::from_polytope(&h.domain.core), handles }),
                )
            }
            ConvexFunction::Conjugate(c) => {
                ("conjugate", to_value(&ConjugateParams { primal: Spec::from_function(&c.primal)? }))
            }
        };
        Ok(Spec { kind: kind.to_string(), dim, params })
    }

    /// Sampling domain: `whole`, `box {"intervals": [[lo, hi], ..]}` or `polytope`.
    pub fn to_domain(&self) -> Result<Domain> {
        let kind = self.kind.as_str();
        match kind {
            "whole" => Ok(Domain::Whole { dim: self.dim }),
            "box" => {
                #[derive(Deserialize)]
                struct BoxParams {
                    intervals: Vec<[Option<f64>; 2]>,
                }
                let p: BoxParams = params(kind, &self.params)?;
                if p.intervals.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: p.intervals.len() });
                }
                Ok(Domain::Box { intervals: p.intervals.iter().map(interval_from).collect() })
            }
            "polytope" => {
                let p: PolytopeSpec = params(kind, &self.params)?;
                Ok(Domain::Polytope(p.to_polytope(self.dim)?))
            }
            other => Err(Error::InvalidSpec(format!("unknown domain kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::mixed_exponential;

    #[test]
    fn rotated_angle_spec() {
        let text = r#"{"kind": "rotated", "dim": 2, "params": {"angle": 0.5,
            "inner": {"kind": "separable", "dim": 2, "params": {"pieces": [
                {"kind": "exp", "scale": 1.0, "rate": 1.0}, {"kind": "exp", "scale": 1.0, "rate": 2.0}]}}}}"#;
        let f = Spec::from_json(text).unwrap().to_function().unwrap();
        let again = Spec::from_function(&f).unwrap().to_function().unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn mixed_exponential_round_trips() {
        let f = mixed_exponential();
        let s = Spec::from_function(&f).unwrap();
        let parsed = Spec::from_json(&s.to_json()).unwrap();
        assert_eq!(parsed.to_function().unwrap(), f);
    }

    #[test]
    fn bad_specs_are_rejected() {
        for text in [
            r#"{"kind": "quadratic", "dim": 2, "params": {"k": -1}}"#,
            r#"{"kind": "nope", "dim": 2}"#,
            r#"{"kind": "separable", "dim": 3, "params": {"pieces": [{"kind": "quadratic", "k": 1}]}}"#,
            r#"{"kind": "separable", "dim": 1, "params": {"pieces": [{"kind": "power", "degree": 3, "coefficient": 1}]}}"#,
        ] {
            assert!(matches!(
                Spec::from_json(text).and_then(|s| s.to_function()),
                Err(Error::InvalidSpec(_) | Error::DimensionMismatch { .. })
            ));
        }
    }

    #[test]
    fn null_bounds_are_infinite() {
        let text = r#"{"kind": "box", "dim": 2, "params": {"intervals": [[0, null], [null, null]]}}"#;
        let d = Spec::from_json(text).unwrap().to_domain().unwrap();
        assert_eq!(d, Domain::Box { intervals: vec![(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)] });
    }
}
