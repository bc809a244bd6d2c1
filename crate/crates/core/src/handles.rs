//! Polytopes with 1-handles and the family of functions that equal a multiple
//! of the standard quadratic form on the core and split along each handle's
//! primary characteristic.
//!
//! In handle coordinates `y = B_l^T x` the function on handle `l` is
//! `profile_l(y_1) + k (y_2^2 + ... + y_n^2)`, where the profile agrees with
//! `k y_1^2` to infinite order at the gluing offset `p_l`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::connection::{characteristic_recovery, Recovery};
use crate::error::{Error, Result};
use crate::funcspace::{BarrierEnd, ConvexFunction, Domain, Jet3, OneDPiece, Polytope, DEFAULT_RADIUS};
use crate::linalg::{halton, is_special_orthogonal, max_abs};
use crate::matgeo::{stratum_signature, StratumSignature};

/// A box-like handle `I_l x F_l` in the rotated splitting given by `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct Handle {
    /// Special orthogonal; the first column is the primary characteristic.
    pub frame: DMatrix<f64>,
    /// Offset of the primary supporting hyperplane.
    pub p: f64,
    /// Far end of the primary interval; `None` for unbounded.
    pub end: Option<f64>,
    /// Cross-section, a polytope in the remaining `n - 1` coordinates.
    pub face: Polytope,
}

impl Handle {
    pub fn primary(&self) -> DVector<f64> {
        self.frame.column(0).into_owned()
    }

    pub fn coords(&self, x: &[f64]) -> DVector<f64> {
        self.frame.transpose() * DVector::from_column_slice(x)
    }

    pub fn from_coords(&self, y: &[f64]) -> Vec<f64> {
        (&self.frame * DVector::from_column_slice(y)).as_slice().to_vec()
    }

    fn end_or_inf(&self) -> f64 {
        self.end.unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let y = self.coords(x);
        y[0] > self.p && y[0] < self.end_or_inf() && self.face.contains(&y.as_slice()[1..])
    }

    /// Whether `x` lies on `p_l x F_l` within `tol`.
    pub fn on_interface(&self, x: &[f64], tol: f64) -> bool {
        let y = self.coords(x);
        (y[0] - self.p).abs() <= tol && self.face.contains(&y.as_slice()[1..])
    }

    fn truncated_end(&self, radius: f64) -> f64 {
        self.end.unwrap_or(self.p + radius)
    }

    /// Points of the open handle, reproducible.
    pub fn sample(&self, count: usize, radius: f64) -> Vec<Vec<f64>> {
        let face = Domain::Polytope(self.face.clone());
        let zs = face.sample(count, radius);
        let hi = self.truncated_end(radius);
        zs.iter()
            .enumerate()
            .map(|(i, z)| {
                let u = halton(i as u64 + 1, 1)[0];
                let t = self.p + (hi - self.p) * (0.02 + 0.96 * u);
                let mut y = vec![t];
                y.extend_from_slice(z);
                self.from_coords(&y)
            })
            .collect()
    }

    /// Points on the closure of the handle, including its boundary.
    fn closure_samples(&self, count: usize, radius: f64) -> Vec<Vec<f64>> {
        let face = Domain::Polytope(self.face.clone());
        let zs = face.sample(count, radius);
        if zs.is_empty() {
            return Vec::new();
        }
        let dim = zs[0].len();
        let centroid: Vec<f64> = (0..dim).map(|d| zs.iter().map(|z| z[d]).sum::<f64>() / zs.len() as f64).collect();
        let hi = self.truncated_end(radius);
        let mut out = Vec::new();
        for (i, z) in zs.iter().enumerate() {
            // push the face sample to the face boundary along the ray from the centroid
            let dir: Vec<f64> = z.iter().zip(&centroid).map(|(a, c)| a - c).collect();
            let at = |s: f64| -> Vec<f64> { centroid.iter().zip(&dir).map(|(c, d)| c + s * d).collect() };
            let (mut lo_s, mut hi_s) = (1.0, 2.0);
            while self.face.margin(&at(hi_s)) > 0.0 && hi_s < 1e6 {
                hi_s *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo_s + hi_s);
                if self.face.margin(&at(mid)) > 0.0 {
                    lo_s = mid;
                } else {
                    hi_s = mid;
                }
            }
            let boundary = at(lo_s);
            let u = halton(i as u64 + 1, 1)[0];
            for (t, zz) in [
                (self.p, z.clone()),
                (hi, z.clone()),
                (self.p + (hi - self.p) * u, boundary.clone()),
                (self.p, boundary),
            ] {
                let mut y = vec![t];
                y.extend_from_slice(&zz);
                out.push(self.from_coords(&y));
            }
        }
        out
    }

    fn closure_contains(&self, x: &[f64], tol: f64) -> bool {
        let y = self.coords(x);
        y[0] >= self.p - tol && y[0] <= self.end_or_inf() + tol && self.face.margin(&y.as_slice()[1..]) >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Core,
    Handle(usize),
}

/// `core` union every handle union its gluing face.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeWithHandles {
    pub core: Polytope,
    pub handles: Vec<Handle>,
}

const INTERFACE_TOL: f64 = 1e-12;

impl PolytopeWithHandles {
    pub fn dim(&self) -> usize {
        self.core.dim
    }

    /// Region dispatch; the gluing hyperplane belongs to the core.
    pub fn region(&self, x: &[f64]) -> Option<Region> {
        if x.len() != self.dim() {
            return None;
        }
        if let Some(l) = self.handles.iter().position(|h| h.contains(x)) {
            return Some(Region::Handle(l));
        }
        if self.core.contains(x) || self.handles.iter().any(|h| h.on_interface(x, INTERFACE_TOL)) {
            return Some(Region::Core);
        }
        None
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.region(x).is_some()
    }

    pub fn bounding_box(&self, radius: f64) -> Vec<(f64, f64)> {
        let mut bbox = self.core.bounding_box(radius);
        for h in &self.handles {
            let fb = h.face.bounding_box(radius);
            let ends = [h.p, h.truncated_end(radius)];
            let corners = 1usize << fb.len();
            for e in ends {
                for mask in 0..corners {
                    let mut y = vec![e];
                    for (d, &(lo, hi)) in fb.iter().enumerate() {
                        y.push(if mask & (1 << d) != 0 { hi } else { lo });
                    }
                    let x = h.from_coords(&y);
                    for (b, v) in bbox.iter_mut().zip(x) {
                        b.0 = b.0.min(v);
                        b.1 = b.1.max(v);
                    }
                }
            }
        }
        bbox
    }

    /// Check the structural hypotheses by sampling: frames are rotations,
    /// each primary hyperplane supports the core and its face sits on the
    /// core boundary, and the pieces are disjoint with disjoint handle closures.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let core_samples = Domain::Polytope(self.core.clone()).sample(400, DEFAULT_RADIUS);
        for (l, h) in self.handles.iter().enumerate() {
            if h.frame.nrows() != n || !is_special_orthogonal(&h.frame, 1e-10) {
                return Err(Error::InvalidSpec(format!("handle {l}: frame is not in SO({n})")));
            }
            if h.face.dim + 1 != n {
                return Err(Error::InvalidSpec(format!("handle {l}: face must have dimension {}", n - 1)));
            }
            if let Some(e) = h.end {
                if e <= h.p {
                    return Err(Error::InvalidSpec(format!("handle {l}: empty primary interval")));
                }
            }
            let scale = 1.0 + h.p.abs();
            if core_samples.iter().any(|x| h.coords(x)[0] > h.p + 1e-12 * scale) {
                return Err(Error::RegionOverlap(format!("handle {l}: primary hyperplane does not support the core")));
            }
            let face = Domain::Polytope(h.face.clone());
            for z in face.sample(50, DEFAULT_RADIUS) {
                let mut y = vec![h.p - 1e-7 * scale];
                y.extend_from_slice(&z);
                if !self.core.contains(&h.from_coords(&y)) {
                    return Err(Error::RegionOverlap(format!("handle {l}: gluing face leaves the core boundary")));
                }
            }
            for x in h.sample(200, DEFAULT_RADIUS) {
                if self.core.contains(&x) {
                    return Err(Error::RegionOverlap(format!("handle {l} meets the core")));
                }
            }
            for x in h.closure_samples(100, DEFAULT_RADIUS) {
                for (m, other) in self.handles.iter().enumerate() {
                    if m != l && other.closure_contains(&x, 1e-12) {
                        return Err(Error::RegionOverlap(format!("handles {l} and {m} have intersecting closures")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Flat bump amplitude for one handle, with an optional log-barrier end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatBump {
    pub amplitude: f64,
    pub barrier_weight: Option<f64>,
}

impl FlatBump {
    pub fn new(amplitude: f64) -> Self {
        FlatBump { amplitude, barrier_weight: None }
    }

    pub fn with_barrier(mut self, weight: f64) -> Self {
        self.barrier_weight = Some(weight);
        self
    }
}

/// The glued function on a polytope with 1-handles.
#[derive(Debug, Clone, PartialEq)]
pub struct HandleFamily {
    pub domain: PolytopeWithHandles,
    pub k: f64,
    /// One-variable profile per handle, a function of the primary coordinate.
    pub profiles: Vec<OneDPiece>,
}

const CERTIFICATE_GRID: usize = 10_000;

/// Lower bound of the profile's second derivative over the handle interval,
/// from a dense grid. A cell where the third derivative keeps its sign is
/// monotone and bounded by its endpoints; other cells are padded by their slope.
pub fn convexity_certificate(profile: &OneDPiece, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / CERTIFICATE_GRID as f64;
    // keep clear of a barrier end where the profile is undefined
    let at = |i: usize| profile.derivs_unchecked((lo + step * i as f64).min(hi - 1e-9 * (1.0 + hi.abs())));
    let mut prev = at(0);
    let mut min_second = prev.d2;
    for i in 1..=CERTIFICATE_GRID {
        let d = at(i);
        let mut bound = prev.d2.min(d.d2);
        if prev.d3.signum() != d.d3.signum() {
            bound -= 0.5 * step * prev.d3.abs().max(d.d3.abs());
        }
        min_second = min_second.min(bound);
        prev = d;
    }
    min_second
}

/// Build the glued function from a validated domain, the core coefficient
/// `k > 0` and one bump per handle.
pub fn build_handle_family(domain: PolytopeWithHandles, k: f64, bumps: &[FlatBump]) -> Result<ConvexFunction> {
    if !(k > 0.0) {
        return Err(Error::InvalidSpec("core coefficient k must be positive".into()));
    }
    if bumps.len() != domain.handles.len() {
        return Err(Error::InvalidSpec(format!("{} bumps for {} handles", bumps.len(), domain.handles.len())));
    }
    domain.validate()?;
    let mut profiles = Vec::with_capacity(bumps.len());
    for (l, (h, bump)) in domain.handles.iter().zip(bumps).enumerate() {
        let barrier = match bump.barrier_weight {
            Some(weight) => {
                let end = h
                    .end
                    .ok_or_else(|| Error::InvalidSpec(format!("handle {l}: a barrier end needs a bounded interval")))?;
                if !(weight > 0.0) {
                    return Err(Error::InvalidSpec(format!("handle {l}: barrier weight must be positive")));
                }
                Some(BarrierEnd { end, weight })
            }
            None => None,
        };
        let profile = OneDPiece::FlatGlued { k, p: h.p, mu: bump.amplitude, barrier };
        let hi = h.truncated_end(DEFAULT_RADIUS.max(10.0));
        let min_second = convexity_certificate(&profile, h.p, hi);
        let delta = 1e-9 * k;
        if !(min_second > delta) {
            return Err(Error::ConvexityCertificateFailed { handle: l, min_second });
        }
        profiles.push(profile);
    }
    Ok(ConvexFunction::HandleFamily(HandleFamily { domain, k, profiles }))
}

fn profile_is_quadratic(p: &OneDPiece) -> bool {
    match p {
        OneDPiece::FlatGlued { mu, barrier, .. } => *mu == 0.0 && barrier.is_none(),
        OneDPiece::Quadratic { .. } => true,
        OneDPiece::Conjugate(inner) => profile_is_quadratic(inner),
        _ => false,
    }
}

impl HandleFamily {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Jet of the quadratic core formula, valid everywhere.
    pub fn core_jet(&self, x: &[f64]) -> Jet3 {
        ConvexFunction::Quadratic { dim: self.dim(), k: self.k }.jet_unchecked(x).expect("dimension checked by caller")
    }

    /// Jet of the handle-`l` formula at `x`, regardless of region.
    pub fn handle_jet(&self, l: usize, x: &[f64]) -> Result<Jet3> {
        let h = &self.domain.handles[l];
        let n = self.dim();
        let mut pieces = vec![self.profiles[l].clone()];
        pieces.extend(std::iter::repeat_n(OneDPiece::Quadratic { k: self.k }, n - 1));
        let y = h.coords(x);
        Ok(ConvexFunction::Separable(pieces).jet_unchecked(y.as_slice())?.pulled_back(&h.frame.transpose()))
    }

    pub(crate) fn jet_unchecked(&self, x: &[f64]) -> Result<Jet3> {
        match self.domain.region(x) {
            Some(Region::Core) => Ok(self.core_jet(x)),
            Some(Region::Handle(l)) => self.handle_jet(l, x),
            None => Err(Error::OutOfDomain { point: x.to_vec() }),
        }
    }

    /// Handles whose profile is not a quadratic form.
    pub fn bumped_handles(&self) -> Vec<usize> {
        (0..self.profiles.len()).filter(|&l| !profile_is_quadratic(&self.profiles[l])).collect()
    }

    /// Direct inverse of the gradient map, region by region.
    pub fn gradient_preimage(&self, y: &[f64]) -> Option<Vec<f64>> {
        let x0: Vec<f64> = y.iter().map(|v| v / (2.0 * self.k)).collect();
        if self.domain.region(&x0) == Some(Region::Core) {
            return Some(x0);
        }
        for (l, h) in self.domain.handles.iter().enumerate() {
            let yl = h.coords(y);
            let z: Vec<f64> = yl.iter().skip(1).map(|v| v / (2.0 * self.k)).collect();
            if !h.face.contains(&z) {
                continue;
            }
            if let Ok(t) = self.profiles[l].inverse_derivative(yl[0]) {
                let mut c = vec![t];
                c.extend_from_slice(&z);
                let x = h.from_coords(&c);
                if self.domain.region(&x) == Some(Region::Handle(l)) {
                    return Some(x);
                }
            }
        }
        None
    }

    /// Image of the domain under the gradient map, as a polytope with handles.
    pub fn image_domain(&self) -> PolytopeWithHandles {
        let s = 2.0 * self.k;
        let handles = self
            .domain
            .handles
            .iter()
            .zip(&self.profiles)
            .map(|(h, prof)| {
                let p = prof.derivs_unchecked(h.p).d1;
                let end = h.end.and_then(|e| {
                    let lim = prof.derivative_limit(e, true);
                    lim.is_finite().then_some(lim)
                });
                Handle { frame: h.frame.clone(), p, end, face: h.face.scaled(s) }
            })
            .collect();
        PolytopeWithHandles { core: self.domain.core.scaled(s), handles }
    }

    /// The Legendre transform, again a glued family on the image domain.
    pub fn conjugate(&self) -> HandleFamily {
        HandleFamily {
            domain: self.image_domain(),
            k: 1.0 / (4.0 * self.k),
            profiles: self.profiles.iter().map(|p| OneDPiece::Conjugate(Box::new(p.clone()))).collect(),
        }
    }

    /// `count` samples inside handle `l`.
    pub fn sample_handle(&self, l: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
        self.domain.handles[l].sample(count, radius)
    }

    /// A reproducible point on the gluing face of handle `l`.
    pub fn interface_point(&self, l: usize) -> Vec<f64> {
        let h = &self.domain.handles[l];
        let zs = Domain::Polytope(h.face.clone()).sample(16, DEFAULT_RADIUS);
        let dim = h.face.dim;
        let z: Vec<f64> = (0..dim).map(|d| zs.iter().map(|z| z[d]).sum::<f64>() / zs.len() as f64).collect();
        let mut y = vec![h.p];
        y.extend_from_slice(&z);
        h.from_coords(&y)
    }
}

/// One-sided finite-difference weights for the `order`-th derivative on
/// nodes `0, s h, 2 s h, ...` with `s = +-1`.
fn one_sided_weights(order: usize, nodes: usize, h: f64, sign: f64) -> Vec<f64> {
    let pts: Vec<f64> = (0..nodes).map(|j| sign * h * j as f64).collect();
    let mut a = DMatrix::zeros(nodes, nodes);
    let mut fact = 1.0;
    for q in 0..nodes {
        if q > 0 {
            fact *= q as f64;
        }
        for (j, &s) in pts.iter().enumerate() {
            a[(q, j)] = s.powi(q as i32) / fact;
        }
    }
    let mut rhs = DVector::zeros(nodes);
    rhs[order] = 1.0;
    a.lu().solve(&rhs).expect("Vandermonde system is regular").as_slice().to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GluingOrderRow {
    pub order: usize,
    pub core_side: f64,
    pub handle_side: f64,
    pub difference: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GluingStatus {
    Checked,
    NotOnInterface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GluingReport {
    pub handle: usize,
    pub probe: Vec<f64>,
    pub status: GluingStatus,
    pub rows: Vec<GluingOrderRow>,
    /// Largest entry of the difference between the two analytic jets at the probe.
    pub analytic_jump: f64,
    pub passed: bool,
}

/// Compare the core and handle formulas across the gluing face of handle `l`
/// with one-sided differences along the primary direction, orders `0..=max_order`.
pub fn gluing_smoothness_check(
    f: &HandleFamily,
    l: usize,
    max_order: usize,
    probe: Option<&[f64]>,
    h: f64,
) -> Result<GluingReport> {
    if l >= f.domain.handles.len() {
        return Err(Error::InvalidSpec(format!("no handle {l}")));
    }
    if max_order > 5 {
        return Err(Error::InvalidSpec("gluing check supports orders up to 5".into()));
    }
    let handle = &f.domain.handles[l];
    let probe = probe.map(|p| p.to_vec()).unwrap_or_else(|| f.interface_point(l));
    if !handle.on_interface(&probe, 1e-9 * (1.0 + handle.p.abs())) {
        return Ok(GluingReport {
            handle: l,
            probe,
            status: GluingStatus::NotOnInterface,
            rows: Vec::new(),
            analytic_jump: f64::NAN,
            passed: false,
        });
    }
    let u = handle.primary();
    let along = |t: f64| -> Vec<f64> { probe.iter().zip(u.iter()).map(|(x, d)| x + t * d).collect() };
    let core_value = |x: &[f64]| f.core_jet(x).value;
    let handle_value = |x: &[f64]| f.handle_jet(l, x).map(|j| j.value);

    let mut rows = Vec::new();
    for order in 0..=max_order {
        // enough nodes to be exact on the quadratic part
        let nodes = (order + 1).max(3);
        let wc = one_sided_weights(order, nodes, h, -1.0);
        let wh = one_sided_weights(order, nodes, h, 1.0);
        let mut core_side = 0.0;
        let mut handle_side = 0.0;
        for j in 0..nodes {
            core_side += wc[j] * core_value(&along(-h * j as f64));
            handle_side += wh[j] * handle_value(&along(h * j as f64))?;
        }
        let tolerance = if order <= 3 { 1e-6 } else { 1e-6 * h.powi(3 - order as i32) };
        rows.push(GluingOrderRow {
            order,
            core_side,
            handle_side,
            difference: (core_side - handle_side).abs(),
            tolerance,
        });
    }
    let jc = f.core_jet(&probe);
    let jh = f.handle_jet(l, &probe)?;
    let mut analytic_jump = (jc.value - jh.value).abs();
    analytic_jump = analytic_jump.max((jc.gradient - jh.gradient).amax());
    analytic_jump = analytic_jump.max(max_abs(&(jc.hessian - jh.hessian)));
    for (a, b) in jc.third.iter().zip(&jh.third) {
        analytic_jump = analytic_jump.max(max_abs(&(a - b)));
    }
    let passed = rows.iter().all(|r| r.difference < r.tolerance) && analytic_jump < 1e-9;
    Ok(GluingReport { handle: l, probe, status: GluingStatus::Checked, rows, analytic_jump, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumTrace {
    pub histogram: BTreeMap<Vec<usize>, usize>,
    pub signatures: Vec<(Vec<f64>, StratumSignature)>,
}

/// Stratum signature of the Hessian per sample; only the closed stratum and
/// the strata with one simple eigenvalue split off are permitted.
pub fn stratum_trace(f: &ConvexFunction, samples: &[Vec<f64>], rel_gap: f64) -> Result<StratumTrace> {
    let n = f.dim();
    let allowed: Vec<Vec<usize>> = if n == 1 { vec![vec![1]] } else { vec![vec![n], vec![1, n - 1], vec![n - 1, 1]] };
    let mut histogram = BTreeMap::new();
    let mut signatures = Vec::new();
    for x in samples {
        let jet = f.eval_jet3(x)?;
        let sig = stratum_signature(&jet.hessian, rel_gap);
        if !allowed.contains(&sig.partition) {
            return Err(Error::UnexpectedStratum { point: x.clone(), signature: sig.partition });
        }
        *histogram.entry(sig.partition.clone()).or_insert(0) += 1;
        signatures.push((x.clone(), sig));
    }
    Ok(StratumTrace { histogram, signatures })
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoCommonStatus {
    NotApplicable(String),
    Checked(Recovery),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoCommonReport {
    pub status: NoCommonStatus,
    pub threshold: f64,
    pub passed: bool,
}

/// Primaries are "generic" when neither parallel nor perpendicular.
fn generic_pair(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let c = a.dot(b).abs();
    c > 1e-8 && c < 1.0 - 1e-8
}

/// Joint characteristic recovery over two bumped handles with generic
/// primaries must fail, with an optimized minimum above `threshold`.
pub fn no_common_characteristics_check(f: &HandleFamily, samples_per_handle: usize) -> Result<NoCommonReport> {
    let threshold = 1e-2;
    let bumped = f.bumped_handles();
    let mut pair = None;
    'outer: for (i, &a) in bumped.iter().enumerate() {
        for &b in &bumped[i + 1..] {
            if generic_pair(&f.domain.handles[a].primary(), &f.domain.handles[b].primary()) {
                pair = Some((a, b));
                break 'outer;
            }
        }
    }
    let Some((a, b)) = pair else {
        let reason = if bumped.len() < 2 {
            "fewer than two handles carry a non-quadratic profile".to_string()
        } else {
            "bumped handles have parallel or perpendicular primaries".to_string()
        };
        return Ok(NoCommonReport { status: NoCommonStatus::NotApplicable(reason), threshold, passed: true });
    };
    let mut samples = f.sample_handle(a, samples_per_handle, DEFAULT_RADIUS);
    samples.extend(f.sample_handle(b, samples_per_handle, DEFAULT_RADIUS));
    let func = ConvexFunction::HandleFamily(f.clone());
    let recovery = characteristic_recovery(&func, &samples)?;
    let passed = recovery.frame.is_none() && recovery.optimized_min > threshold;
    Ok(NoCommonReport { status: NoCommonStatus::Checked(recovery), threshold, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::AffineMap;

    fn unit_square_with_handle() -> PolytopeWithHandles {
        let core = Polytope::from_box(&[(-1.0, 1.0), (-1.0, 1.0)]);
        let face = Polytope::from_box(&[(-0.5, 0.5)]);
        let h = Handle { frame: DMatrix::identity(2, 2), p: 1.0, end: Some(2.0), face };
        PolytopeWithHandles { core, handles: vec![h] }
    }

    #[test]
    fn region_dispatch_assigns_interface_to_core() {
        let d = unit_square_with_handle();
        assert_eq!(d.region(&[0.0, 0.0]), Some(Region::Core));
        assert_eq!(d.region(&[1.0, 0.2]), Some(Region::Core));
        assert_eq!(d.region(&[1.5, 0.2]), Some(Region::Handle(0)));
        assert_eq!(d.region(&[1.0, 0.9]), None);
        assert_eq!(d.region(&[1.5, 0.9]), None);
    }

    #[test]
    fn validation_catches_overlap() {
        let mut d = unit_square_with_handle();
        d.handles[0].p = 0.5;
        assert!(matches!(d.validate(), Err(Error::RegionOverlap(_))));
        let mut d = unit_square_with_handle();
        let mut second = d.handles[0].clone();
        second.face = Polytope::from_box(&[(0.4, 0.9)]);
        d.handles.push(second);
        assert!(matches!(d.validate(), Err(Error::RegionOverlap(_))));
        assert!(unit_square_with_handle().validate().is_ok());
    }

    #[test]
    fn certificate_rejects_large_negative_amplitude() {
        let d = unit_square_with_handle();
        let r = build_handle_family(d, 1.0, &[FlatBump::new(-5.0)]);
        assert!(matches!(r, Err(Error::ConvexityCertificateFailed { handle: 0, .. })));
    }

    #[test]
    fn one_sided_weights_differentiate_cubics_exactly() {
        let w = one_sided_weights(1, 3, 0.1, 1.0);
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let d: f64 = w.iter().enumerate().map(|(j, c)| c * f(0.1 * j as f64)).sum();
        assert!((d + 1.0).abs() < 1e-12);
        let w = one_sided_weights(3, 4, 0.1, -1.0);
        let g = |t: f64| t.powi(3);
        let d: f64 = w.iter().enumerate().map(|(j, c)| c * g(-0.1 * j as f64)).sum();
        assert!((d - 6.0).abs() < 1e-9);
    }

    #[test]
    fn gluing_probe_off_interface_is_flagged() {
        let d = unit_square_with_handle();
        let ConvexFunction::HandleFamily(f) = build_handle_family(d, 1.0, &[FlatBump::new(1.0)]).unwrap() else {
            unreachable!()
        };
        let r = gluing_smoothness_check(&f, 0, 3, Some(&[0.0, 0.0]), 1e-2).unwrap();
        assert_eq!(r.status, GluingStatus::NotOnInterface);
        assert!(!r.passed);
    }

    #[test]
    fn affine_map_sign_convention() {
        let m = AffineMap::new(vec![-1.0, 0.0], 1.0);
        assert!(m.eval(&[0.5, 3.0]) > 0.0);
        assert!(m.eval(&[1.5, 3.0]) < 0.0);
    }
}
