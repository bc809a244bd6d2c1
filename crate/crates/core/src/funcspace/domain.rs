//! Domains: boxes, polytopes cut out by strictly positive affine maps, and
//! polytopes with 1-handles. Sampling is a Halton sequence rejected against
//! membership, so identical requests return identical point sets.

use crate::handles::PolytopeWithHandles;
use crate::linalg::halton;

/// Default truncation radius for unbounded directions.
pub const DEFAULT_RADIUS: f64 = 5.0;

/// `normal . x + offset`, required to be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl AffineMap {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        AffineMap { normal, offset }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub maps: Vec<AffineMap>,
    /// Optional sampling box; falls back to `[-radius, radius]^dim`.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Polytope {
    pub fn new(dim: usize, maps: Vec<AffineMap>) -> Self {
        Polytope { dim, maps, bounds: None }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    /// Axis-aligned box `lo < x_i < hi` written as a polytope.
    pub fn from_box(intervals: &[(f64, f64)]) -> Self {
        let dim = intervals.len();
        let mut maps = Vec::new();
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            let mut e = vec![0.0; dim];
            if lo.is_finite() {
                e[i] = 1.0;
                maps.push(AffineMap::new(e.clone(), -lo));
            }
            if hi.is_finite() {
                e[i] = -1.0;
                maps.push(AffineMap::new(e, hi));
            }
        }
        Polytope { dim, maps, bounds: Some(intervals.to_vec()) }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.maps.iter().all(|m| m.eval(x) > 0.0)
    }

    /// Minimum of the defining affine maps; positive exactly inside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.maps.iter().map(|m| m.eval(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self, radius: f64) -> Vec<(f64, f64)> {
        match &self.bounds {
            Some(b) => b.iter().map(|&(lo, hi)| clip(lo, hi, radius)).collect(),
            None => vec![(-radius, radius); self.dim],
        }
    }

    /// Image under `x -> scale * x`.
    pub fn scaled(&self, scale: f64) -> Polytope {
        Polytope {
            dim: self.dim,
            maps: self
                .maps
                .iter()
                .map(|m| AffineMap::new(m.normal.iter().map(|a| a / scale).collect(), m.offset))
                .collect(),
            bounds: self.bounds.as_ref().map(|b| b.iter().map(|&(lo, hi)| sorted(lo * scale, hi * scale)).collect()),
        }
    }
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn clip(lo: f64, hi: f64, radius: f64) -> (f64, f64) {
    let lo = if lo.is_finite() { lo } else { hi.min(0.0) - radius };
    let hi = if hi.is_finite() { hi } else { lo.max(0.0) + radius };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// All of R^dim.
    Whole {
        dim: usize,
    },
    /// Product of open intervals; infinite ends allowed.
    Box {
        intervals: Vec<(f64, f64)>,
    },
    Polytope(Polytope),
    PolytopeWithHandles(PolytopeWithHandles),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Whole { dim } => *dim,
            Domain::Box { intervals } => intervals.len(),
            Domain::Polytope(p) => p.dim,
            Domain::PolytopeWithHandles(p) => p.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Whole { .. } => x.iter().all(|v| v.is_finite()),
            Domain::Box { intervals } => intervals.iter().zip(x).all(|(&(lo, hi), &v)| v > lo && v < hi),
            Domain::Polytope(p) => p.contains(x),
            Domain::PolytopeWithHandles(p) => p.contains(x),
        }
    }

    pub fn bounding_box(&self, radius: f64) -> Vec<(f64, f64)> {
        match self {
            Domain::Whole { dim } => vec![(-radius, radius); *dim],
            Domain::Box { intervals } => intervals.iter().map(|&(lo, hi)| clip(lo, hi, radius)).collect(),
            Domain::Polytope(p) => p.bounding_box(radius),
            Domain::PolytopeWithHandles(p) => p.bounding_box(radius),
        }
    }

    /// `count` low-discrepancy points inside the domain (and accepted by
    /// `filter`), drawn from the truncated bounding box.
    pub fn sample_filtered(&self, count: usize, radius: f64, filter: impl Fn(&[f64]) -> bool) -> Vec<Vec<f64>> {
        let bbox = self.bounding_box(radius);
        let dim = bbox.len();
        let mut out = Vec::with_capacity(count);
        let max_draws = 2000 * count.max(1) as u64 + 10_000;
        let mut index = 1;
        while out.len() < count && index < max_draws {
            let u = halton(index, dim);
            index += 1;
            let x: Vec<f64> = u.iter().zip(&bbox).map(|(t, &(lo, hi))| lo + t * (hi - lo)).collect();
            if self.contains(&x) && filter(&x) {
                out.push(x);
            }
        }
        out
    }

    pub fn sample(&self, count: usize, radius: f64) -> Vec<Vec<f64>> {
        self.sample_filtered(count, radius, |_| true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_respects_membership() {
        let tri = Polytope::new(
            2,
            vec![
                AffineMap::new(vec![1.0, 0.0], 0.0),
                AffineMap::new(vec![0.0, 1.0], 0.0),
                AffineMap::new(vec![-1.0, -1.0], 1.0),
            ],
        )
        .with_bounds(vec![(0.0, 1.0), (0.0, 1.0)]);
        let d = Domain::Polytope(tri);
        let pts = d.sample(200, DEFAULT_RADIUS);
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|p| d.contains(p) && p[0] + p[1] < 1.0));
        assert_eq!(pts, d.sample(200, DEFAULT_RADIUS));
    }

    #[test]
    fn unbounded_box_is_truncated() {
        let d = Domain::Box { intervals: vec![(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)] };
        let bbox = d.bounding_box(2.0);
        assert_eq!(bbox, vec![(0.0, 2.0), (-2.0, 2.0)]);
        assert!(d.sample(50, 2.0).iter().all(|p| p[0] > 0.0));
    }

    #[test]
    fn box_as_polytope_agrees_with_box() {
        let iv = vec![(-1.0, 2.0), (0.5, 3.0)];
        let p = Polytope::from_box(&iv);
        let b = Domain::Box { intervals: iv };
        for x in [[0.0, 1.0], [-1.5, 1.0], [1.9, 2.9], [1.0, 0.4]] {
            assert_eq!(p.contains(&x), b.contains(&x));
        }
    }
}
