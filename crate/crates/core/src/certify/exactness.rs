use super::nondegeneracy::{nondegeneracy_test, NondegeneracyReport};
use super::Verdict;
use crate::auglag::{eval_auglag_coords, ExtendedPoint};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problems::NlsdpProblem;
use crate::solver::{continuation_solve, SolveTrace, SolverConfig};
use crate::symmat::DEFAULT_RANK_TOL;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Box used for the "minimizers stay bounded" screen.
pub const BOUNDED_BOX: f64 = 1e4;
pub const PROBE_RADII: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const PROBE_SAMPLES_PER_RADIUS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub trace: SolveTrace,
    /// Every stage minimizer lies in `[-BOUNDED_BOX, BOUNDED_BOX]` coordinatewise.
    pub bounded: Verdict,
    pub max_abs_coordinate: f64,
    /// The final stage is feasible with `η ≤ eta_tol`.
    pub penalty_type: Verdict,
    pub final_eta: Option<f64>,
    pub final_feasibility: Option<f64>,
    /// `𝓛(ξ, c) ≥ 𝓛(ξ*, c)` on shrinking neighbourhoods of the reference points.
    pub local_exactness: Verdict,
    pub probe_c: Option<f64>,
    pub probe_points: usize,
    pub probe_violations: usize,
    pub nondegeneracy: Option<NondegeneracyReport>,
    pub notes: Vec<String>,
}

/// Counts sampled points in `ξ* ± r` (for each radius) with
/// `𝓛(ξ, c) < 𝓛(ξ*, c) − 1e-12·max(1, |𝓛(ξ*, c)|)`.
pub fn local_exactness_probe(
    problem: &NlsdpProblem,
    center: &ExtendedPoint,
    c: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, usize)> {
    let z0 = center.to_coords();
    let (v0, _) = eval_auglag_coords(problem, &z0, c, false)?;
    let ExtReal::Finite(v0) = v0 else {
        return Err(Error::StartOutsideDomain);
    };
    let slack = 1e-12 * v0.abs().max(1.0);
    let mut points = 0;
    let mut violations = 0;
    for r in PROBE_RADII {
        for _ in 0..PROBE_SAMPLES_PER_RADIUS {
            let z: Vec<f64> = z0.iter().map(|v| v + rng.gen_range(-r..=r)).collect();
            points += 1;
            if let (ExtReal::Finite(v), _) = eval_auglag_coords(problem, &z, c, false)? {
                if v < v0 - slack {
                    violations += 1;
                }
            }
        }
    }
    Ok((points, violations))
}

/// Runs the continuation solve and screens its output for the hypotheses of
/// the localization principle: bounded minimizers, penalty-type clustering at
/// feasible points with `η → 0`, and local exactness at the registered KKT
/// pairs for the largest stage `c`.
pub fn exactness_sweep(
    problem: &NlsdpProblem,
    start: &ExtendedPoint,
    config: &SolverConfig,
    seed: u64,
) -> Result<ExactnessReport> {
    let trace = continuation_solve(problem, start, config)?;
    let mut notes = Vec::new();

    let max_abs = trace
        .stages
        .iter()
        .flat_map(|s| s.point.to_coords())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let bounded = if trace.stages.is_empty() {
        Verdict::Inconclusive
    } else if max_abs <= BOUNDED_BOX {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let last = trace.last();
    let final_feas = last.map(|s| s.feas_g.max(s.feas_h));
    let penalty_type = match last {
        None => Verdict::Inconclusive,
        Some(s) if s.eta <= config.eta_tol && s.feas_g.max(s.feas_h) <= config.feas_tol => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };

    let nondegeneracy = match last {
        Some(s) => Some(nondegeneracy_test(problem, &s.point.x, DEFAULT_RANK_TOL)?),
        None => None,
    };
    if let Some(nd) = &nondegeneracy {
        if !nd.nondegenerate {
            notes.push(format!("final point is degenerate: {}", nd.reason));
        }
    }

    let mut centers = problem.known_solutions.clone();
    if centers.is_empty() {
        if let Some(s) = trace.certified() {
            notes.push("no registered KKT pair; probing the certified minimizer".into());
            centers.push(s.point.clone());
        }
    }
    let probe_c = last.map(|s| s.c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut probe_points, mut probe_violations) = (0, 0);
    let mut probe_failed = false;
    if let Some(c) = probe_c {
        for center in &centers {
            match local_exactness_probe(problem, center, c, &mut rng) {
                Ok((p, v)) => {
                    probe_points += p;
                    probe_violations += v;
                }
                Err(Error::StartOutsideDomain) => {
                    probe_failed = true;
                    notes.push("reference point lies outside Omega_alpha".into());
                }
                Err(e) => return Err(e),
            }
        }
    }
    let local_exactness = if probe_violations > 0 || probe_failed {
        Verdict::Fail
    } else if probe_points == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };

    Ok(ExactnessReport {
        bounded,
        max_abs_coordinate: max_abs,
        penalty_type,
        final_eta: last.map(|s| s.eta),
        final_feasibility: final_feas,
        local_exactness,
        probe_c,
        probe_points,
        probe_violations,
        nondegeneracy,
        notes,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    NoCounterexampleFound,
    CounterexampleFound,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelReport {
    pub verdict: ProbeVerdict,
    pub c: f64,
    pub f_star: f64,
    pub samples: usize,
    pub finite_samples: usize,
    pub counterexamples: usize,
    /// Lowest-valued counterexample, in extended coordinates.
    pub worst_point: Option<Vec<f64>>,
    pub worst_value: Option<f64>,
}

/// Each side of the reference box is doubled about its midpoint for sampling.
pub const SUBLEVEL_ENLARGE: f64 = 2.0;

/// Screens `{ξ : 𝓛(ξ, c) < f*}` for points outside `reference` by uniform
/// sampling of the enlarged box (extended coordinates `(x, upper(λ), μ)`).
pub fn sublevel_probe(
    problem: &NlsdpProblem,
    c: f64,
    reference: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<SublevelReport> {
    let f_star = problem
        .f_star
        .ok_or_else(|| Error::InvalidParameter(format!("problem `{}` has no known f*", problem.name())))?;
    if reference.len() != problem.extended_len() {
        return Err(Error::DimensionMismatch {
            context: "sublevel box",
            expected: problem.extended_len(),
            found: reference.len(),
        });
    }
    if reference.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidParameter("sublevel box must be finite with lo <= hi".into()));
    }
    let enlarged: Vec<(f64, f64)> = reference
        .iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * SUBLEVEL_ENLARGE;
            (mid - half, mid + half)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SublevelReport {
        verdict: ProbeVerdict::Inconclusive,
        c,
        f_star,
        samples,
        finite_samples: 0,
        counterexamples: 0,
        worst_point: None,
        worst_value: None,
    };
    for _ in 0..samples {
        let z: Vec<f64> = enlarged.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
        let ExtReal::Finite(v) = eval_auglag_coords(problem, &z, c, false)?.0 else {
            continue;
        };
        report.finite_samples += 1;
        let outside = z.iter().zip(reference).any(|(v, (lo, hi))| v < lo || v > hi);
        if outside && v < f_star {
            report.counterexamples += 1;
            if report.worst_value.is_none_or(|w| v < w) {
                report.worst_value = Some(v);
                report.worst_point = Some(z);
            }
        }
    }
    report.verdict = if samples == 0 || report.finite_samples == 0 {
        ProbeVerdict::Inconclusive
    } else if report.counterexamples > 0 {
        ProbeVerdict::CounterexampleFound
    } else {
        ProbeVerdict::NoCounterexampleFound
    };
    Ok(report)
}
