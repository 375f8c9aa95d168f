use crate::error::Result;
use crate::penalty::{check_growth_conditions, limit_consistency, GrowthReport, LimitBehavior, LimitReport};
use crate::problems::SingularPenaltyProblem;
use crate::solver::{penalty_continuation, PenaltyTrace, SolverConfig, TraceStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCertification {
    pub problem: String,
    pub growth: GrowthReport,
    pub trace: PenaltyTrace,
    /// `F(x, p, c)` as `p ↓ 0` at the selected stage minimizer.
    pub limit: Option<LimitReport>,
    pub certified: bool,
    pub notes: Vec<String>,
}

/// Growth screen for `φ, ω` on `[0, 1]`, penalty continuation from the default
/// start, and the `p ↓ 0` limit at the resulting `x`.
pub fn check_penalty(problem: &SingularPenaltyProblem, config: &SolverConfig) -> Result<PenaltyCertification> {
    let growth = check_growth_conditions(problem, 1.0, 100);
    let (x0, p0) = problem.default_start.clone();
    let trace = penalty_continuation(problem, (&x0, p0), config)?;
    let mut notes = growth.notes.clone();
    let stage = trace.certified_stage.map(|i| &trace.stages[i]).or(trace.stages.last());
    let limit = match stage {
        Some(s) => {
            let ps: Vec<f64> = (1..=20).map(|k| 0.5f64.powi(k)).collect();
            Some(limit_consistency(problem, &s.x, s.c, &ps)?)
        }
        None => {
            notes.push("empty c schedule".into());
            None
        }
    };
    let certified = trace.status == TraceStatus::Certified
        && growth.phi_has_linear_minorant
        && growth.omega_has_linear_minorant
        && limit.as_ref().is_some_and(|l| l.behavior == LimitBehavior::ConvergesToLimit);
    Ok(PenaltyCertification {
        problem: problem.name().to_string(),
        growth,
        trace,
        limit,
        certified,
        notes,
    })
}
