//! `invhess`: run the inverse-Hessian check suites on JSON function specs.

mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Expect, GluingArgs, LiftArgs, RunConfig};
use invhess_core::funcspace::DEFAULT_RADIUS;
use invhess_core::propi::Tolerances;
use report::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "invhess", version, about = "Checks whether inverse Hessians of convex functions are Hessians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Function spec (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Sampling domain spec (JSON); defaults to the function's own domain.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Half-width of the sampling box for unbounded domains.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Values below this classify as zero.
    #[arg(long, default_value_t = 1e-9)]
    zero_tol: f64,
    /// Values above this classify as nonzero.
    #[arg(long, default_value_t = 1e-3)]
    nonzero_tol: f64,
    /// Relative eigenvalue gap for stratum clustering.
    #[arg(long, default_value_t = 1e-6)]
    rel_gap: f64,
    /// Step for finite-difference cross-checks.
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,
    /// Allowed spread of the planar characteristic angle.
    #[arg(long, default_value_t = 1e-6)]
    angle_tol: f64,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            spec: self.spec.clone(),
            domain: self.domain.clone(),
            samples: self.samples,
            radius: self.radius,
            tolerances: Tolerances { zero: self.zero_tol, nonzero: self.nonzero_tol },
            rel_gap: self.rel_gap,
            fd_step: self.fd_step,
            angle_tol: self.angle_tol,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Residual, Christoffel defect and commutator per sample.
    CheckPropi {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Expect::Holds)]
        expect: Expect,
    },
    /// Christoffel matrices and the commutator identity.
    Christoffel {
        #[command(flatten)]
        common: Common,
    },
    /// Planar jet identities and constancy of the characteristic angle.
    Jets2d {
        #[command(flatten)]
        common: Common,
    },
    /// Recover a common characteristic frame.
    Characteristics {
        #[command(flatten)]
        common: Common,
    },
    /// Horizontal lift of a polyline.
    Lift {
        #[command(flatten)]
        common: Common,
        /// Vertices as `x,y;x,y;...`.
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        no_halving: bool,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Emit every n-th integrator step.
        #[arg(long, default_value_t = 50)]
        every: usize,
        /// Also require the lift to stay in the orthogonal-columns set.
        #[arg(long)]
        require_c: bool,
    },
    /// Legendre transform checks.
    Legendre {
        #[command(flatten)]
        common: Common,
    },
    /// Build a handle family and report its certificates and image.
    HandlesBuild {
        #[command(flatten)]
        common: Common,
    },
    /// Gluing smoothness, local frames and strata of a handle family.
    HandlesCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        max_order: usize,
        #[arg(long, default_value_t = 1e-2)]
        gluing_step: f64,
    },
    /// Schouten bracket of the standard and Kahler bivectors.
    PoissonCommute {
        #[command(flatten)]
        common: Common,
    },
    /// Classification over the built-in catalog.
    ReportAll {
        #[command(flatten)]
        common: Common,
    },
}

fn run(command: &Command) -> Result<(Report, &Common), CliError> {
    let (report, common) = match command {
        Command::CheckPropi { common, expect } => (commands::check_propi(&validated(common)?, *expect)?, common),
        Command::Christoffel { common } => (commands::christoffel_report(&validated(common)?)?, common),
        Command::Jets2d { common } => (commands::jets2d(&validated(common)?)?, common),
        Command::Characteristics { common } => (commands::characteristics(&validated(common)?)?, common),
        Command::Lift { common, points, step, no_halving, tolerance, every, require_c } => {
            let args = LiftArgs {
                points: commands::parse_points(points)?,
                step: *step,
                check_halving: !no_halving,
                tolerance: *tolerance,
                every: *every,
                require_c: *require_c,
            };
            (commands::lift(&validated(common)?, &args)?, common)
        }
        Command::Legendre { common } => (commands::legendre(&validated(common)?)?, common),
        Command::HandlesBuild { common } => (commands::handles_build(&validated(common)?)?, common),
        Command::HandlesCheck { common, max_order, gluing_step } => {
            let args = GluingArgs { max_order: *max_order, h: *gluing_step };
            (commands::handles_check(&validated(common)?, &args)?, common)
        }
        Command::PoissonCommute { common } => (commands::poisson_commute(&validated(common)?)?, common),
        Command::ReportAll { common } => (commands::report_all(&validated(common)?)?, common),
    };
    Ok((report, common))
}

fn validated(common: &Common) -> Result<RunConfig, CliError> {
    let cfg = common.config();
    cfg.validate()?;
    Ok(cfg)
}

fn emit(report: &mut Report, common: &Common) -> io::Result<()> {
    report.sort();
    match &common.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(common.format, &mut w)?;
            w.flush()
        }
        None => report.write(common.format, &mut io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((mut report, common)) => {
            if let Err(e) = emit(&mut report, common) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            for line in report.summary_lines() {
                eprintln!("{line}");
            }
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Math(e)) => {
            eprintln!("check failed: {e}");
            ExitCode::from(1)
        }
    }
}
