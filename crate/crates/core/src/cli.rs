//! Command-line driver. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 certified, 1 not certified, 2 usage or problem error.
//!
//! `sweep` writes CSV with header
//! `c,value,eta,stationarity,feas_G,feas_h,iters,x0,…,x{d-1}`; in penalty mode
//! `eta` holds `p`, `feas_G` is 0, `feas_h` is `‖g(x)‖`, `stationarity` is
//! `‖∇F‖` (empty on the `p = 0` face) and a trailing `p` column is added.
//! Numbers use 17 significant digits in scientific notation.

use crate::auglag::ExtendedPoint;
use crate::certify::{
    certify_problem, check_penalty, kkt_check, CertificationReport, CertifyOptions, PenaltyCertification,
};
use crate::error::{Error, Result};
use crate::oracle::{cross_check_auglag, cross_check_penalty, OracleCheck};
use crate::penalty::eval_penalty;
use crate::problems::{registry, Problem, ProblemKind, ProblemSpec};
use crate::solver::{
    continuation_solve, penalty_continuation, penalty_sweep, sweep, CSchedule, PenaltyTrace, SolveTrace,
    SolverConfig, TraceStatus,
};
use crate::symmat::{norm, SymMatrix, DEFAULT_RANK_TOL};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "exact-merit", version, about = "Exact merit functions for nonlinear semidefinite programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continuation solve plus a KKT check of the result; JSON report on stdout.
    Solve(RunArgs),
    /// Nondegeneracy, SOSC, exactness sweep and sublevel screen; JSON report on stdout.
    Certify(CertifyArgs),
    /// One CSV row per penalty parameter.
    Sweep(SweepArgs),
    /// List registry problems.
    List,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Registry problem name (omit when using --problem-file).
    pub problem: Option<String>,
    /// JSON problem description: {"name": ..., "params": {...}, "alpha": ..., "kappa": ...}.
    #[arg(long, value_name = "JSON")]
    pub problem_file: Option<PathBuf>,
    /// Problem parameter as KEY=VALUE, VALUE parsed as JSON (e.g. x0=[1,-0.5,0.7]).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Singular-penalty mode.
    #[arg(long)]
    pub penalty: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    #[arg(long = "c-growth", default_value_t = 10.0)]
    pub c_growth: f64,
    #[arg(long = "c-max")]
    pub c_max: Option<f64>,
    #[arg(long = "max-stages", default_value_t = 8)]
    pub max_stages: usize,
    #[arg(long = "grad-tol", default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a brute-force grid cross-check.
    #[arg(long)]
    pub oracle: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            c_schedule: CSchedule {
                c0: self.c0,
                growth: self.c_growth,
                max_stages: self.max_stages,
                c_max: self.c_max,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "rank-tol", default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[arg(long = "sosc-tol", default_value_t = 1e-8)]
    pub sosc_tol: f64,
    /// Random critical-cone directions for the sampled SOSC check.
    #[arg(long, default_value_t = 200)]
    pub directions: usize,
    #[arg(long = "sublevel-samples", default_value_t = 10_000)]
    pub sublevel_samples: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated penalty parameters, e.g. --c 1,10,100; defaults to the
    /// --c0/--c-growth/--max-stages/--c-max schedule.
    #[arg(long = "c", value_delimiter = ',', value_name = "C,...")]
    pub cs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AugmentedLagrangian,
    SingularPenalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: String,
    pub mode: Mode,
    pub config: SolverConfig,
    pub trace: Option<SolveTrace>,
    pub penalty_trace: Option<PenaltyTrace>,
    /// KKT residuals at the selected stage (augmented-Lagrangian mode).
    pub kkt: Option<CertificationReport>,
    pub oracle: Option<OracleCheck>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub problem: String,
    pub mode: Mode,
    pub report: Option<CertificationReport>,
    pub penalty: Option<PenaltyCertification>,
    pub oracle: Option<OracleCheck>,
    pub certified: bool,
}

pub fn load_problem(args: &ProblemArgs) -> Result<Problem> {
    let mut spec = match (&args.problem_file, &args.problem) {
        (Some(path), None) => ProblemSpec::from_file(path)?,
        (None, Some(name)) => ProblemSpec::named(name.clone()),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "give either a problem name or --problem-file, not both".into(),
            ))
        }
        (None, None) => return Err(Error::InvalidParameter("missing problem name".into())),
    };
    for kv in &args.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("--param expects KEY=VALUE, got `{kv}`")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::from(v));
        spec.params.insert(k.to_string(), value);
    }
    if args.alpha.is_some() {
        spec.alpha = args.alpha;
    }
    if args.kappa.is_some() {
        spec.kappa = args.kappa;
    }
    let problem = spec.build()?;
    if args.penalty && problem.kind() != ProblemKind::Penalty {
        return Err(Error::WrongProblemKind(format!(
            "--penalty needs a singular-penalty problem; `{}` is not one",
            problem.name()
        )));
    }
    Ok(problem)
}

fn json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn status_code(certified: bool) -> i32 {
    if certified {
        EXIT_CERTIFIED
    } else {
        EXIT_NOT_CERTIFIED
    }
}

pub fn cmd_solve(args: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.solver.config();
    config.validate()?;
    let report = match load_problem(&args.problem)? {
        Problem::Nlsdp(p) => {
            let trace = continuation_solve(&p, &p.default_start, &config)?;
            let stage = trace.certified().or(trace.last());
            let kkt = stage.map(|s| kkt_check(&p, &s.point)).transpose()?;
            let oracle = match (args.solver.oracle, stage) {
                (true, Some(s)) => Some(cross_check_auglag(&p, &s.point, s.c)?),
                _ => None,
            };
            let certified = trace.status == TraceStatus::Certified
                && kkt.as_ref().is_some_and(|k| k.kkt)
                && oracle.as_ref().is_none_or(OracleCheck::passed);
            SolveReport {
                problem: p.name().to_string(),
                mode: Mode::AugmentedLagrangian,
                config,
                trace: Some(trace),
                penalty_trace: None,
                kkt,
                oracle,
                certified,
            }
        }
        Problem::Penalty(p) => {
            let (x0, p0) = p.default_start.clone();
            let trace = penalty_continuation(&p, (&x0, p0), &config)?;
            let stage = trace.certified_stage.map(|i| &trace.stages[i]).or(trace.stages.last());
            let oracle = match (args.solver.oracle, stage) {
                (true, Some(s)) => Some(cross_check_penalty(&p, &s.x, s.p, s.c)?),
                _ => None,
            };
            let certified =
                trace.status == TraceStatus::Certified && oracle.as_ref().is_none_or(OracleCheck::passed);
            SolveReport {
                problem: p.name().to_string(),
                mode: Mode::SingularPenalty,
                config,
                trace: None,
                penalty_trace: Some(trace),
                kkt: None,
                oracle,
                certified,
            }
        }
    };
    json(out, &report)?;
    Ok(status_code(report.certified))
}

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.solver.config();
    config.validate()?;
    let report = match load_problem(&args.problem)? {
        Problem::Nlsdp(p) => {
            let opts = CertifyOptions {
                rank_tol: args.rank_tol,
                sosc_tol: args.sosc_tol,
                num_directions: args.directions,
                seed: args.solver.seed,
                sublevel_samples: args.sublevel_samples,
                ..CertifyOptions::default()
            };
            let r = certify_problem(&p, &p.default_start, &config, &opts)?;
            let oracle = match (args.solver.oracle, r.c) {
                (true, Some(c)) if !r.x.is_empty() => {
                    let lambda = r.lambda.as_deref().map(SymMatrix::from_rows).transpose()?;
                    let xi = ExtendedPoint::new(r.x.clone(), lambda, r.mu.clone());
                    Some(cross_check_auglag(&p, &xi, c)?)
                }
                _ => None,
            };
            let certified = r.certified && oracle.as_ref().is_none_or(OracleCheck::passed);
            CertifyReport {
                problem: p.name().to_string(),
                mode: Mode::AugmentedLagrangian,
                report: Some(r),
                penalty: None,
                oracle,
                certified,
            }
        }
        Problem::Penalty(p) => {
            let r = check_penalty(&p, &config)?;
            let last = r.trace.certified_stage.map(|i| &r.trace.stages[i]).or(r.trace.stages.last());
            let oracle = match (args.solver.oracle, last) {
                (true, Some(s)) => Some(cross_check_penalty(&p, &s.x, s.p, s.c)?),
                _ => None,
            };
            let certified = r.certified && oracle.as_ref().is_none_or(OracleCheck::passed);
            CertifyReport {
                problem: p.name().to_string(),
                mode: Mode::SingularPenalty,
                report: None,
                penalty: Some(r),
                oracle,
                certified,
            }
        }
    };
    json(out, &report)?;
    Ok(status_code(report.certified))
}

fn num(v: f64) -> String {
    // `+ 0.0` maps -0.0 to 0.0.
    format!("{:.16e}", v + 0.0)
}

pub const CSV_HEADER: &str = "c,value,eta,stationarity,feas_G,feas_h,iters";

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.solver.config();
    config.validate()?;
    // Without --c the continuation schedule supplies the list.
    let cs = if args.cs.is_empty() {
        config.c_schedule.values()
    } else {
        args.cs.clone()
    };
    if cs.is_empty() {
        return Err(Error::InvalidParameter("empty c list".into()));
    }
    let mut lines = Vec::new();
    let certified = match load_problem(&args.problem)? {
        Problem::Nlsdp(p) => {
            let trace = sweep(&p, &p.default_start, &config, &cs)?;
            let xs: Vec<String> = (0..p.dim()).map(|i| format!("x{i}")).collect();
            lines.push(std::iter::once(CSV_HEADER.to_string()).chain(xs).collect::<Vec<_>>().join(","));
            for s in &trace.stages {
                let mut row = vec![
                    num(s.c),
                    num(s.value),
                    num(s.eta),
                    num(s.stationarity),
                    num(s.feas_g),
                    num(s.feas_h),
                    s.iterations.to_string(),
                ];
                row.extend(s.point.x.iter().map(|v| num(*v)));
                lines.push(row.join(","));
            }
            trace.status == TraceStatus::Certified
        }
        Problem::Penalty(p) => {
            let (x0, p0) = p.default_start.clone();
            let trace = penalty_sweep(&p, (&x0, p0), &config, &cs)?;
            let xs: Vec<String> = (0..p.dim()).map(|i| format!("x{i}")).collect();
            lines.push(
                std::iter::once(CSV_HEADER.to_string())
                    .chain(xs)
                    .chain(std::iter::once("p".to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            for s in &trace.stages {
                let stationarity = if s.p > 0.0 {
                    eval_penalty(&p, &s.x, s.p, s.c, true)?
                        .gradient
                        .map(|(mut gx, gp)| {
                            gx.push(gp);
                            num(norm(&gx))
                        })
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                let mut row = vec![
                    num(s.c),
                    num(s.value),
                    num(s.p),
                    stationarity,
                    num(0.0),
                    num(s.feas),
                    s.iterations.to_string(),
                ];
                row.extend(s.x.iter().map(|v| num(*v)));
                row.push(num(s.p));
                lines.push(row.join(","));
            }
            trace.status == TraceStatus::Certified
        }
    };
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(status_code(certified))
}

fn cmd_list(out: &mut dyn Write) -> Result<i32> {
    for e in registry() {
        let kind = match e.kind {
            ProblemKind::Nlsdp => "nlsdp",
            ProblemKind::Penalty => "penalty",
        };
        writeln!(out, "{:<24} {:<8} {}", e.name, kind, e.documentation)?;
    }
    Ok(EXIT_CERTIFIED)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{text}");
                EXIT_CERTIFIED
            } else {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::List => cmd_list(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
