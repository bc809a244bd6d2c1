//! One function per subcommand, each producing a [`Report`].

use std::path::PathBuf;

use nalgebra::DMatrix;

use invhess_core::catalog::builtin;
use invhess_core::connection::{
    characteristic_recovery, frame_distance_up_to_signs, horizontal_lift, CurveSpec, LiftOptions,
};
use invhess_core::funcspace::spec::Spec;
use invhess_core::funcspace::{ConvexFunction, OneDPiece};
use invhess_core::handles::{
    convexity_certificate, gluing_smoothness_check, no_common_characteristics_check, stratum_trace, GluingStatus,
    HandleFamily, NoCommonStatus,
};
use invhess_core::jets2d::slope_constancy_check;
use invhess_core::legendre::{
    conjugate_propi_invariance, hessian_duality_error, involution, legendre_domain_image, nearby_seed,
};
use invhess_core::linalg::{offdiag_max, sym_eigen};
use invhess_core::poisson::commuting_equiv_check;
use invhess_core::propi::{cartan_subalgebra_check, christoffel, symmetry_equiv_check, Classification, Tolerances};
use invhess_core::{Domain, Error};

use crate::report::{Cell, Report};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, malformed specs.
    Usage(String),
    /// A check could not be completed for a mathematical reason.
    Math(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::DimensionMismatch { .. }
            | Error::RegionOverlap(_)
            | Error::CurveLeavesDomain { .. } => CliError::Usage(e.to_string()),
            other => CliError::Math(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Math(e) => write!(f, "{e}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Expect {
    /// The inverse Hessian is a Hessian on every sample.
    Holds,
    /// The property fails on every sample.
    Fails,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub domain: Option<PathBuf>,
    pub samples: usize,
    pub radius: f64,
    pub tolerances: Tolerances,
    pub rel_gap: f64,
    pub fd_step: f64,
    pub angle_tol: f64,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.samples == 0 {
            return Err(CliError::Usage("sample count must be at least 1".into()));
        }
        let positive = [
            ("radius", self.radius),
            ("zero tolerance", self.tolerances.zero),
            ("nonzero tolerance", self.tolerances.nonzero),
            ("relative gap", self.rel_gap),
            ("finite-difference step", self.fd_step),
            ("angle tolerance", self.angle_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive")));
            }
        }
        if self.tolerances.zero >= self.tolerances.nonzero {
            return Err(CliError::Usage("zero tolerance must be below the nonzero tolerance".into()));
        }
        Ok(())
    }

    fn read(path: &PathBuf) -> CliResult<Spec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Ok(Spec::from_json(&text)?)
    }

    pub fn spec(&self) -> CliResult<Spec> {
        match &self.spec {
            Some(p) => Self::read(p),
            None => Err(CliError::Usage("this command needs --spec".into())),
        }
    }

    pub fn function(&self) -> CliResult<ConvexFunction> {
        Ok(self.spec()?.to_function()?)
    }

    fn domain(&self) -> CliResult<Option<Domain>> {
        self.domain.as_ref().map(|p| Ok(Self::read(p)?.to_domain()?)).transpose()
    }

    pub fn samples(&self, f: &ConvexFunction) -> CliResult<Vec<Vec<f64>>> {
        let pts = match self.domain()? {
            Some(d) => {
                if d.dim() != f.dim() {
                    return Err(CliError::Usage(format!("domain has dimension {}, function {}", d.dim(), f.dim())));
                }
                d.sample_filtered(self.samples, self.radius, |x| f.contains(x))
            }
            None => f.sample(self.samples, self.radius),
        };
        if pts.is_empty() {
            return Err(CliError::Usage("no sample falls inside the domain".into()));
        }
        Ok(pts)
    }
}

fn coord_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn coords(x: &[f64]) -> Vec<Cell> {
    x.iter().map(|v| Cell::Num(*v)).collect()
}

fn columns(head: Vec<String>, tail: &[&str]) -> Vec<String> {
    head.into_iter().chain(tail.iter().map(|s| s.to_string())).collect()
}

pub fn check_propi(cfg: &RunConfig, expect: Expect) -> CliResult<Report> {
    let f = cfg.function()?;
    let samples = cfg.samples(&f)?;
    let eq = symmetry_equiv_check(&f, &samples, cfg.tolerances)?;
    let cols = ["residual", "defect", "commutator", "class_residual", "class_defect", "class_commutator", "status"];
    let mut report = Report::new("check-propi", columns(coord_columns("x", f.dim()), &cols));
    let wanted = match expect {
        Expect::Holds => Classification::Zero,
        Expect::Fails => Classification::NonZero,
    };
    for row in &eq.rows {
        let ok = row.classes.iter().all(|c| *c == wanted);
        report.passed &= ok;
        let mut cells = coords(&row.point);
        cells.extend([row.residual.into(), row.defect.into(), row.commutator.into()]);
        cells.extend(row.classes.iter().map(|c| Cell::text(c.as_str())));
        cells.push(ok.into());
        report.push(cells);
    }
    report.note("samples", eq.rows.len());
    report.note("indeterminate", eq.indeterminate);
    report.note("max_residual", eq.rows.iter().map(|r| r.residual).fold(0.0, f64::max));
    Ok(report)
}

pub fn christoffel_report(cfg: &RunConfig) -> CliResult<Report> {
    let f = cfg.function()?;
    let n = f.dim();
    let samples = cfg.samples(&f)?;
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            entries.push(format!("gamma_{i}{j}"));
        }
    }
    let mut head = coord_columns("x", n);
    head.push("k".into());
    head.extend(entries);
    let mut report = Report::new("christoffel", columns(head, &["defect", "commutator_gap", "status"]));
    for x in &samples {
        let ch = christoffel(&f, x)?;
        let cartan = cartan_subalgebra_check(&f, x)?;
        for k in 0..n {
            let gap = (&cartan.commutators[k] - &ch.defects[k]).amax();
            let ok = gap <= 1e-10 * (1.0 + cartan.max_commutator);
            report.passed &= ok;
            let mut cells = coords(x);
            cells.push(k.into());
            // row-major
            cells.extend(ch.matrices[k].transpose().iter().map(|v| Cell::Num(*v)));
            cells.extend([ch.defects[k].amax().into(), gap.into(), ok.into()]);
            report.push(cells);
        }
    }
    Ok(report)
}

pub fn jets2d(cfg: &RunConfig) -> CliResult<Report> {
    let f = cfg.function()?;
    let samples = cfg.samples(&f)?;
    let r = slope_constancy_check(&f, &samples)?;
    let cols = ["angle", "quadric_1", "quadric_2", "cubic_1", "cubic_2"];
    let mut report = Report::new("jets2d", columns(coord_columns("x", 2), &cols));
    for row in &r.rows {
        let mut cells = coords(&row.point);
        cells.push(row.angle.map_or(Cell::text("umbilic"), Cell::Num));
        cells.extend([row.quadrics.0, row.quadrics.1, row.cubics.0, row.cubics.1].map(Cell::Num));
        report.push(cells);
    }
    let zero = cfg.tolerances.zero;
    report.passed = r.spread < cfg.angle_tol && r.max_relative_quadric < zero && r.max_relative_cubic < zero;
    report.note("angle", r.angle().unwrap_or(f64::NAN));
    report.note("spread", r.spread);
    report.note("max_quadric", r.max_quadric);
    report.note("max_cubic", r.max_cubic);
    report.note("max_relative_quadric", r.max_relative_quadric);
    report.note("max_relative_cubic", r.max_relative_cubic);
    report.note("base_point_hits", r.base_point_hits);
    Ok(report)
}

pub fn characteristics(cfg: &RunConfig) -> CliResult<Report> {
    let f = cfg.function()?;
    let samples = cfg.samples(&f)?;
    let r = characteristic_recovery(&f, &samples)?;
    let n = f.dim();
    let mut report = Report::new("characteristics", columns(vec!["column".into()], &[]));
    report.columns.extend(coord_columns("b", n));
    let frame = r.frame.as_ref().unwrap_or(&r.best_frame);
    for j in 0..n {
        let mut cells = vec![Cell::from(j)];
        cells.extend(frame.column(j).iter().map(|v| Cell::Num(*v)));
        report.push(cells);
    }
    report.passed = r.frame.is_some();
    report.note("found", r.frame.is_some());
    if let Some(a) = r.angle() {
        report.note("angle", a);
    }
    report.note("max_offdiag", r.max_offdiag);
    report.note("optimized_min", r.optimized_min);
    Ok(report)
}

/// Parse `x,y;x,y;...` into polyline vertices.
pub fn parse_points(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|p| {
            p.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad coordinate {v:?}: {e}"))))
                .collect()
        })
        .collect()
}

pub struct LiftArgs {
    pub points: Vec<Vec<f64>>,
    pub step: f64,
    pub check_halving: bool,
    pub tolerance: f64,
    pub every: usize,
    pub require_c: bool,
}

pub fn lift(cfg: &RunConfig, args: &LiftArgs) -> CliResult<Report> {
    let f = cfg.function()?;
    let n = f.dim();
    if args.points.len() < 2 || args.points.iter().any(|p| p.len() != n) {
        return Err(CliError::Usage(format!("--points needs at least two points of dimension {n}")));
    }
    if !(args.step > 0.0 && args.tolerance > 0.0) || args.every == 0 {
        return Err(CliError::Usage("step, tolerance and --every must be positive".into()));
    }
    let h0 = f.eval_jet3(&args.points[0])?.hessian;
    let (l, e) = sym_eigen(&h0);
    let a0 = &e * DMatrix::from_diagonal(&l.map(|v| 1.0 / v.sqrt()));
    let options = LiftOptions { step: args.step, check_halving: args.check_halving, tolerance: args.tolerance };
    let r = horizontal_lift(&f, &CurveSpec::Polyline { points: args.points.clone() }, &a0, options)?;
    let mut report = Report::new("lift", columns(vec!["t".into()], &[]));
    report.columns.extend(coord_columns("x", n));
    report.columns.extend(["orthonormality".to_string(), "c_drift".to_string()]);
    let last = r.samples.len() - 1;
    for (i, s) in r.samples.iter().enumerate() {
        if i % args.every != 0 && i != last {
            continue;
        }
        let mut cells = vec![Cell::Num(s.t)];
        cells.extend(coords(&s.point));
        cells.extend([s.orthonormality.into(), s.c_drift.into()]);
        report.push(cells);
    }
    report.passed = r.orthonormality_drift < args.tolerance && (!args.require_c || r.c_drift < args.tolerance);
    report.note("orthonormality_drift", r.orthonormality_drift);
    report.note("c_drift", r.c_drift);
    report.note("halving_difference", optional(r.halving_difference));
    let b = r.final_frame();
    report.note("final_offdiag", offdiag_max(&(b.transpose() * b)));
    Ok(report)
}

pub fn legendre(cfg: &RunConfig) -> CliResult<Report> {
    let f = cfg.function()?;
    let n = f.dim();
    let samples = cfg.samples(&f)?;
    let inv = conjugate_propi_invariance(&f, &samples)?;
    let cols = ["primal_residual", "conjugate_residual", "involution_error", "duality_error", "status"];
    let mut head = coord_columns("x", n);
    head.extend(coord_columns("y", n));
    let mut report = Report::new("legendre", columns(head, &cols));
    for row in &inv.rows {
        let back = involution(&f, &row.x, &nearby_seed(&f, &row.x))?;
        let inv_err = back.point_error.max(back.value_error);
        let duality = hessian_duality_error(&f, &row.x, cfg.fd_step)?;
        // the conjugate must inherit the primal's status
        let inherits = (row.primal_residual < cfg.tolerances.zero) == (row.conjugate_residual < inv.tolerance);
        let ok = inherits && inv_err < 1e-8 && duality < 1e-6;
        report.passed &= ok;
        let mut cells = coords(&row.x);
        cells.extend(coords(&row.y));
        cells.extend([row.primal_residual, row.conjugate_residual, inv_err, duality].map(Cell::Num));
        cells.push(ok.into());
        report.push(cells);
    }
    report.note("precondition", inv.precondition);
    report.note("invariance", inv.passed);
    if let ConvexFunction::HandleFamily(h) = &f {
        let img = legendre_domain_image(h, cfg.samples)?;
        report.passed &= img.passed;
        report.note("image_coverage", img.coverage);
        report.note("image_primary_error", img.primary_errors.iter().cloned().fold(0.0, f64::max));
        report.note("conjugate_k", h.conjugate().k);
    }
    Ok(report)
}

fn handle_family(cfg: &RunConfig) -> CliResult<HandleFamily> {
    let spec = cfg.spec()?;
    if spec.kind != "handle_family" {
        return Err(CliError::Usage(format!("expected a handle_family spec, got {:?}", spec.kind)));
    }
    match spec.to_function()? {
        ConvexFunction::HandleFamily(h) => Ok(h),
        _ => unreachable!("handle_family specs build handle families"),
    }
}

fn optional(v: Option<f64>) -> Cell {
    v.map_or(Cell::text("none"), Cell::Num)
}

pub fn handles_build(cfg: &RunConfig) -> CliResult<Report> {
    let h = handle_family(cfg)?;
    let image = h.image_domain();
    let cols =
        ["handle", "p", "end", "amplitude", "barrier_weight", "certificate", "image_p", "image_end"].map(String::from);
    let mut report = Report::new("handles-build", cols.to_vec());
    for (l, (handle, profile)) in h.domain.handles.iter().zip(&h.profiles).enumerate() {
        let OneDPiece::FlatGlued { mu, barrier, .. } = profile else { unreachable!("built profiles are glued") };
        let hi = handle.end.unwrap_or(handle.p + cfg.radius.max(10.0));
        report.push(vec![
            l.into(),
            handle.p.into(),
            optional(handle.end),
            (*mu).into(),
            optional(barrier.as_ref().map(|b| b.weight)),
            convexity_certificate(profile, handle.p, hi).into(),
            image.handles[l].p.into(),
            optional(image.handles[l].end),
        ]);
    }
    report.note("k", h.k);
    report.note("conjugate_k", h.conjugate().k);
    report.note("bumped_handles", h.bumped_handles().len());
    Ok(report)
}

pub struct GluingArgs {
    pub max_order: usize,
    pub h: f64,
}

pub fn handles_check(cfg: &RunConfig, gluing: &GluingArgs) -> CliResult<Report> {
    let h = handle_family(cfg)?;
    let func = ConvexFunction::HandleFamily(h.clone());
    let cols = ["handle", "gluing_max_difference", "analytic_jump", "gluing", "local_offdiag", "frame_error", "status"];
    let mut report = Report::new("handles-check", cols.map(String::from).to_vec());
    let per_handle = cfg.samples.clamp(4, 200);
    for l in 0..h.domain.handles.len() {
        let g = gluing_smoothness_check(&h, l, gluing.max_order, None, gluing.h)?;
        let worst = g.rows.iter().map(|r| r.difference / r.tolerance).fold(0.0, f64::max);
        let rec = characteristic_recovery(&func, &h.sample_handle(l, per_handle, cfg.radius))?;
        let frame_error = rec.frame.as_ref().map(|b| frame_distance_up_to_signs(b, &h.domain.handles[l].frame));
        let ok = g.passed && frame_error.is_some_and(|e| e < 1e-6);
        report.passed &= ok;
        let status = if g.status == GluingStatus::Checked { "checked" } else { "not_on_interface" };
        report.push(vec![
            l.into(),
            worst.into(),
            g.analytic_jump.into(),
            Cell::text(status),
            rec.optimized_min.into(),
            optional(frame_error),
            ok.into(),
        ]);
    }
    let nc = no_common_characteristics_check(&h, per_handle)?;
    report.passed &= nc.passed;
    match &nc.status {
        NoCommonStatus::NotApplicable(reason) => report.note("no_common", Cell::text(format!("n/a: {reason}"))),
        NoCommonStatus::Checked(r) => report.note("no_common_min", r.optimized_min),
    }
    let samples = cfg.samples(&func)?;
    let trace = stratum_trace(&func, &samples, cfg.rel_gap)?;
    for (sig, count) in &trace.histogram {
        let key = sig.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+");
        report.note(&format!("stratum_{key}"), *count);
    }
    Ok(report)
}

pub fn poisson_commute(cfg: &RunConfig) -> CliResult<Report> {
    let f = cfg.function()?;
    let samples = cfg.samples(&f)?;
    let r = commuting_equiv_check(&f, &samples, cfg.fd_step)?;
    let cols = ["bracket", "residual", "fd_gap", "identity_gap", "class", "status"];
    let mut report = Report::new("poisson-commute", columns(coord_columns("x", f.dim()), &cols));
    for row in &r.rows {
        let class = cfg.tolerances.classify(row.bracket);
        let ok = class == Classification::Zero;
        report.passed &= ok;
        let mut cells = coords(&row.point);
        cells.extend([row.bracket, row.residual, row.fd_gap, row.identity_gap].map(Cell::Num));
        cells.extend([Cell::text(class.as_str()), ok.into()]);
        report.push(cells);
    }
    report.note("max_bracket", r.max_bracket);
    report.note("max_identity_gap", r.max_identity_gap);
    report.note("max_fd_gap", r.max_fd_gap);
    Ok(report)
}

/// Property classification over the built-in catalog, against the known answers.
pub fn report_all(cfg: &RunConfig) -> CliResult<Report> {
    let cols = ["name", "dim", "expected", "max_residual", "min_residual", "indeterminate", "max_bracket", "status"];
    let mut report = Report::new("report-all", cols.map(String::from).to_vec());
    for entry in builtin() {
        let samples = entry.samples(cfg.samples, cfg.radius);
        let eq = symmetry_equiv_check(&entry.function, &samples, cfg.tolerances)?;
        let poisson = commuting_equiv_check(&entry.function, &samples, cfg.fd_step)?;
        let ok = if entry.inverse_is_hessian {
            eq.all_zero()
        } else {
            eq.rows.iter().all(|r| r.classes.iter().all(|c| *c == Classification::NonZero))
        };
        report.passed &= ok;
        report.push(vec![
            Cell::text(entry.name),
            entry.function.dim().into(),
            Cell::text(if entry.inverse_is_hessian { "holds" } else { "fails" }),
            eq.rows.iter().map(|r| r.residual).fold(0.0, f64::max).into(),
            eq.rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min).into(),
            eq.indeterminate.into(),
            poisson.max_bracket.into(),
            ok.into(),
        ]);
    }
    Ok(report)
}
