//! Unconstrained minimization of the merit functions and the `c`-continuation
//! loop.
//!
//! `𝓛(·, c)` is minimized over flat coordinates `(x, upper(λ), μ)`; `λ` is a
//! free symmetric matrix. `+∞` trial values are ordinary line-search
//! rejections, which keeps the iterates inside `Ω_α` without a projection.

mod lbfgs;

use crate::auglag::{eta, eval_auglag, eval_auglag_coords, feasibility_residuals, grad_x_lagrangian, ExtendedPoint};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::penalty::{eval_penalty, FEAS_TOL};
use crate::problems::{NlsdpProblem, SingularPenaltyProblem};
use crate::symmat::{dot, norm, project_psd};
use lbfgs::Objective;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub sufficient_decrease: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            sufficient_decrease: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

/// `c_k = c0 · growth^k` for `k < max_stages`, truncated at `c_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CSchedule {
    pub c0: f64,
    pub growth: f64,
    pub max_stages: usize,
    pub c_max: Option<f64>,
}

impl Default for CSchedule {
    fn default() -> Self {
        CSchedule {
            c0: 1.0,
            growth: 10.0,
            max_stages: 8,
            c_max: None,
        }
    }
}

impl CSchedule {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut c = self.c0;
        for _ in 0..self.max_stages {
            if let Some(m) = self.c_max {
                if c > m * (1.0 + 1e-12) {
                    break;
                }
            }
            out.push(c);
            c *= self.growth;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub line_search: LineSearch,
    pub memory: usize,
    pub c_schedule: CSchedule,
    pub eta_tol: f64,
    pub feas_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-8,
            max_iters: 5000,
            line_search: LineSearch::default(),
            memory: 10,
            c_schedule: CSchedule::default(),
            eta_tol: 1e-8,
            feas_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        pos(self.grad_tol, "grad_tol")?;
        pos(self.eta_tol, "eta_tol")?;
        pos(self.feas_tol, "feas_tol")?;
        pos(self.line_search.sufficient_decrease, "sufficient_decrease")?;
        pos(self.c_schedule.c0, "c0")?;
        if !(self.line_search.backtrack > 0.0 && self.line_search.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtrack factor must lie in (0, 1)".into()));
        }
        if !(self.c_schedule.growth > 1.0 && self.c_schedule.growth.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "growth factor must be > 1, got {}",
                self.c_schedule.growth
            )));
        }
        if let Some(m) = self.c_schedule.c_max {
            pos(m, "c_max")?;
        }
        if self.memory == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("memory and max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationLimit,
    /// No step passed the line search, even along steepest descent.
    Stalled,
    /// Penalty run ended on the `p = 0` face.
    SingularFace,
    /// Value fell below `-1e30`.
    Unbounded,
}

/// One accepted line-search step: `after ≤ before + armijo_margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub before: f64,
    pub after: f64,
    pub armijo_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedSolve {
    pub point: ExtendedPoint,
    pub value: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub grad_norm: f64,
    /// The start lay outside `Ω_α` and `x` was moved back inside first.
    pub recovered: bool,
    pub steps: Vec<StepRecord>,
}

struct AugLagObjective<'a> {
    problem: &'a NlsdpProblem,
    c: f64,
}

impl Objective for AugLagObjective<'_> {
    fn eval(&mut self, z: &[f64]) -> Result<(ExtReal, Option<Vec<f64>>)> {
        if z.iter().any(|v| !v.is_finite()) {
            return Ok((ExtReal::PosInfinity, None));
        }
        eval_auglag_coords(self.problem, z, self.c, true)
    }
}

const RECOVERY_ITERS: usize = 500;

/// `ψ(x) = trace([G]₊²)^κ + ‖h‖²` and its gradient; `ψ < α` is `Ω_α`-membership
/// of each piece.
fn infeasibility(problem: &NlsdpProblem, x: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let kappa = problem.kappa();
    let mut grad = vec![0.0; x.len()];
    let mut dk = 0.0;
    if let Some(g) = problem.g(x) {
        let plus = project_psd(&g)?;
        let delta = plus.norm_sq();
        dk = delta.powf(kappa);
        if delta > 0.0 {
            let scale = kappa * delta.powf(kappa - 1.0) * 2.0;
            for (gi, part) in grad.iter_mut().zip(problem.dg(x)) {
                *gi += scale * plus.inner(&part);
            }
        }
    }
    let h = problem.h(x);
    if !h.is_empty() {
        let jth = problem.jac_h(x).tr_matvec(&h);
        for (gi, v) in grad.iter_mut().zip(jth) {
            *gi += 2.0 * v;
        }
    }
    Ok((dk, dot(&h, &h), grad))
}

/// Steepest descent on `ψ` until both `a, b ≥ α/2`.
fn recover_domain(problem: &NlsdpProblem, x0: &[f64]) -> Result<Option<Vec<f64>>> {
    let alpha = problem.alpha();
    let inside = |dk: f64, hh: f64| dk <= 0.5 * alpha && hh <= 0.5 * alpha;
    let mut x = x0.to_vec();
    let (mut dk, mut hh, mut g) = infeasibility(problem, &x)?;
    for _ in 0..RECOVERY_ITERS {
        if inside(dk, hh) {
            return Ok(Some(x));
        }
        let psi = dk + hh;
        let gg = dot(&g, &g);
        if !(gg > 0.0) || !gg.is_finite() {
            return Ok(None);
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            if let Ok((d2, h2, g2)) = infeasibility(problem, &trial) {
                if (d2 + h2).is_finite() && d2 + h2 <= psi - 1e-4 * t * gg {
                    x = trial;
                    (dk, hh, g) = (d2, h2, g2);
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(inside(dk, hh).then_some(x))
}

/// Minimizes `𝓛(·, c)` from `start`.
///
/// A start outside `Ω_α` is first moved (in `x` only) by steepest descent on
/// `trace([G]₊²)^κ + ‖h‖²`; when that fails the error is [`Error::StartOutsideDomain`].
pub fn minimize_extended(
    problem: &NlsdpProblem,
    c: f64,
    start: &ExtendedPoint,
    config: &SolverConfig,
) -> Result<ExtendedSolve> {
    config.validate()?;
    start.check(problem)?;
    if !start.is_finite() {
        return Err(Error::NonFinite("start point".into()));
    }
    let mut obj = AugLagObjective { problem, c };
    let mut z0 = start.to_coords();
    let mut recovered = false;
    let (mut v0, mut g0) = obj.eval(&z0)?;
    if !v0.is_finite() {
        let x = recover_domain(problem, &start.x)?.ok_or(Error::StartOutsideDomain)?;
        z0[..x.len()].copy_from_slice(&x);
        (v0, g0) = obj.eval(&z0)?;
        recovered = true;
    }
    let (ExtReal::Finite(v0), Some(g0)) = (v0, g0) else {
        return Err(Error::StartOutsideDomain);
    };
    let out = lbfgs::minimize(&mut obj, z0, v0, g0, config)?;
    Ok(ExtendedSolve {
        point: ExtendedPoint::from_coords(problem, &out.z),
        value: out.value,
        termination: out.termination,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        recovered,
        steps: out.steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySolve {
    pub x: Vec<f64>,
    pub p: f64,
    pub value: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub steps: Vec<StepRecord>,
}

struct PenaltyObjective<'a> {
    problem: &'a SingularPenaltyProblem,
    c: f64,
}

impl Objective for PenaltyObjective<'_> {
    fn eval(&mut self, z: &[f64]) -> Result<(ExtReal, Option<Vec<f64>>)> {
        let (x, p) = z.split_at(z.len() - 1);
        if z.iter().any(|v| !v.is_finite()) || p[0] < 0.0 {
            return Ok((ExtReal::PosInfinity, None));
        }
        let e = eval_penalty(self.problem, x, p[0], self.c, true)?;
        Ok((
            e.value,
            e.gradient.map(|(mut gx, gp)| {
                gx.push(gp);
                gx
            }),
        ))
    }

    fn project(&self, z: &mut [f64]) {
        if let Some(p) = z.last_mut() {
            *p = p.max(0.0);
        }
    }

    fn face(&mut self, z: &[f64], value: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let x = &z[..z.len() - 1];
        let g = self.problem.model().constraint(x);
        if dot(&g, &g).sqrt() > FEAS_TOL {
            return Ok(None);
        }
        match eval_penalty(self.problem, x, 0.0, self.c, false)?.value {
            ExtReal::Finite(v) if v <= value => {
                let mut zf = x.to_vec();
                zf.push(0.0);
                Ok(Some((zf, v)))
            }
            _ => Ok(None),
        }
    }
}

/// Projected quasi-Newton on `ℝ^d × [0, ∞)`.
///
/// Once an iterate is feasible to `FEAS_TOL`, the `p = 0` branch is evaluated
/// and taken when it is no worse; the run then ends with `SingularFace`.
pub fn minimize_penalty(
    problem: &SingularPenaltyProblem,
    c: f64,
    start: (&[f64], f64),
    config: &SolverConfig,
) -> Result<PenaltySolve> {
    config.validate()?;
    let (x0, p0) = start;
    if !(p0 > 0.0) {
        return Err(Error::InteriorStartRequired);
    }
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            context: "penalty start",
            expected: problem.dim(),
            found: x0.len(),
        });
    }
    let mut obj = PenaltyObjective { problem, c };
    let mut z0 = x0.to_vec();
    z0.push(p0);
    let (ExtReal::Finite(v0), Some(g0)) = obj.eval(&z0)? else {
        return Err(Error::StartOutsideDomain);
    };
    let out = lbfgs::minimize(&mut obj, z0, v0, g0, config)?;
    let (x, p) = out.z.split_at(out.z.len() - 1);
    Ok(PenaltySolve {
        x: x.to_vec(),
        p: p[0],
        value: out.value,
        termination: out.termination,
        iterations: out.iterations,
        steps: out.steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub c: f64,
    pub point: ExtendedPoint,
    pub value: f64,
    pub f: f64,
    pub eta: f64,
    /// `‖∇ₓL‖`.
    pub stationarity: f64,
    pub feas_g: f64,
    pub feas_h: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub grad_norm: f64,
    /// `𝓛(warm start, c)`; `+∞` when the warm start was outside `Ω_α`.
    pub start_value: ExtReal,
    /// The stage meets the stopping signature.
    pub signature: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub problem: String,
    pub stages: Vec<StageRecord>,
    pub status: TraceStatus,
    /// Index of the first stage meeting the signature.
    pub certified_stage: Option<usize>,
}

impl SolveTrace {
    pub fn certified(&self) -> Option<&StageRecord> {
        self.certified_stage.map(|i| &self.stages[i])
    }

    pub fn last(&self) -> Option<&StageRecord> {
        self.stages.last()
    }
}

/// Stopping signature: `η ≤ eta_tol`, both feasibility residuals `≤ feas_tol`,
/// and `|𝓛 − f| ≤ eta_tol`.
pub fn meets_signature(stage: &StageRecord, config: &SolverConfig) -> bool {
    stage.eta <= config.eta_tol
        && stage.feas_g.max(stage.feas_h) <= config.feas_tol
        && (stage.value - stage.f).abs() <= config.eta_tol
}

fn run_stage(
    problem: &NlsdpProblem,
    c: f64,
    start: &ExtendedPoint,
    config: &SolverConfig,
) -> Result<StageRecord> {
    let start_value = eval_auglag(problem, start, c, false)?.value;
    let sol = minimize_extended(problem, c, start, config)?;
    let x = &sol.point.x;
    let (feas_g, feas_h) = feasibility_residuals(problem, x)?;
    let gl = grad_x_lagrangian(problem, &sol.point)?;
    let mut rec = StageRecord {
        c,
        value: sol.value,
        f: problem.f(x),
        eta: eta(problem, &sol.point)?,
        stationarity: dot(&gl, &gl).sqrt(),
        feas_g,
        feas_h,
        iterations: sol.iterations,
        termination: sol.termination,
        grad_norm: sol.grad_norm,
        start_value,
        signature: false,
        point: sol.point,
    };
    rec.signature = meets_signature(&rec, config);
    Ok(rec)
}

fn run_stages(
    problem: &NlsdpProblem,
    start: &ExtendedPoint,
    config: &SolverConfig,
    cs: &[f64],
    stop_early: bool,
) -> Result<SolveTrace> {
    config.validate()?;
    let mut stages: Vec<StageRecord> = Vec::with_capacity(cs.len());
    let mut certified_stage = None;
    for &c in cs {
        let warm = stages.last().map_or(start, |s| &s.point).clone();
        let rec = run_stage(problem, c, &warm, config)?;
        let hit = rec.signature;
        stages.push(rec);
        if hit && certified_stage.is_none() {
            certified_stage = Some(stages.len() - 1);
            if stop_early {
                break;
            }
        }
    }
    Ok(SolveTrace {
        problem: problem.name().to_string(),
        stages,
        status: if certified_stage.is_some() {
            TraceStatus::Certified
        } else {
            TraceStatus::NotCertified
        },
        certified_stage,
    })
}

/// Minimizes `𝓛(·, c)` along the configured schedule, warm-starting each stage,
/// until a stage meets the stopping signature.
pub fn continuation_solve(
    problem: &NlsdpProblem,
    start: &ExtendedPoint,
    config: &SolverConfig,
) -> Result<SolveTrace> {
    run_stages(problem, start, config, &config.c_schedule.values(), true)
}

/// Runs every `c` in `cs` (warm-started, no early stop).
pub fn sweep(
    problem: &NlsdpProblem,
    start: &ExtendedPoint,
    config: &SolverConfig,
    cs: &[f64],
) -> Result<SolveTrace> {
    if cs.is_empty() {
        return Err(Error::InvalidParameter("empty c list".into()));
    }
    if cs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("every c must be > 0".into()));
    }
    run_stages(problem, start, config, cs, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyStageRecord {
    pub c: f64,
    pub x: Vec<f64>,
    pub p: f64,
    pub value: f64,
    pub f: f64,
    /// `‖g(x)‖`.
    pub feas: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTrace {
    pub problem: String,
    pub stages: Vec<PenaltyStageRecord>,
    pub status: TraceStatus,
    pub certified_stage: Option<usize>,
}

/// Warm-started penalty minimization over every `c` in `cs`. A stage is
/// certified when it ends on the `p = 0` face, or with `p` and `‖g(x)‖` both
/// `≤ feas_tol`.
pub fn penalty_sweep(
    problem: &SingularPenaltyProblem,
    start: (&[f64], f64),
    config: &SolverConfig,
    cs: &[f64],
) -> Result<PenaltyTrace> {
    if cs.is_empty() {
        return Err(Error::InvalidParameter("empty c list".into()));
    }
    if cs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("every c must be > 0".into()));
    }
    penalty_stages(problem, start, config, cs, false)
}

/// Penalty analogue of [`continuation_solve`]: follows the configured
/// schedule and stops at the first certified stage.
pub fn penalty_continuation(
    problem: &SingularPenaltyProblem,
    start: (&[f64], f64),
    config: &SolverConfig,
) -> Result<PenaltyTrace> {
    penalty_stages(problem, start, config, &config.c_schedule.values(), true)
}

fn penalty_stages(
    problem: &SingularPenaltyProblem,
    start: (&[f64], f64),
    config: &SolverConfig,
    cs: &[f64],
    stop_early: bool,
) -> Result<PenaltyTrace> {
    config.validate()?;
    if !(start.1 > 0.0) {
        return Err(Error::InteriorStartRequired);
    }
    let mut stages: Vec<PenaltyStageRecord> = Vec::new();
    let mut certified_stage = None;
    let (mut x, mut p) = (start.0.to_vec(), start.1);
    for &c in cs {
        let rec = if p == 0.0 {
            // Already on the exact face; F(x, 0, c) = f(x) for every c.
            let e = eval_penalty(problem, &x, 0.0, c, false)?;
            let value = e.value.finite().ok_or(Error::StartOutsideDomain)?;
            PenaltyStageRecord {
                c,
                x: x.clone(),
                p,
                value,
                f: value,
                feas: norm_g(problem, &x),
                iterations: 0,
                termination: Termination::SingularFace,
            }
        } else {
            let sol = minimize_penalty(problem, c, (&x, p), config)?;
            let f = problem.model().objective(&sol.x).finite().unwrap_or(f64::INFINITY);
            PenaltyStageRecord {
                c,
                feas: norm_g(problem, &sol.x),
                x: sol.x,
                p: sol.p,
                value: sol.value,
                f,
                iterations: sol.iterations,
                termination: sol.termination,
            }
        };
        let ok = rec.termination == Termination::SingularFace
            || (rec.p <= config.feas_tol && rec.feas <= config.feas_tol);
        if rec.termination != Termination::Unbounded {
            x = rec.x.clone();
            p = rec.p;
        }
        stages.push(rec);
        if ok && certified_stage.is_none() {
            certified_stage = Some(stages.len() - 1);
            if stop_early {
                break;
            }
        }
    }
    Ok(PenaltyTrace {
        problem: problem.name().to_string(),
        stages,
        status: if certified_stage.is_some() {
            TraceStatus::Certified
        } else {
            TraceStatus::NotCertified
        },
        certified_stage,
    })
}

fn norm_g(problem: &SingularPenaltyProblem, x: &[f64]) -> f64 {
    norm(&problem.model().constraint(x))
}
