//! Certification of candidate solutions: KKT residuals and `η`, the
//! nondegeneracy rank test, the second-order sufficient condition on the
//! critical cone, and empirical screens for the hypotheses under which the
//! merit function is globally exact.

mod exactness;
mod kkt;
mod nondegeneracy;
mod penalty_checks;
mod sosc;

pub use exactness::{
    exactness_sweep, local_exactness_probe, sublevel_probe, ExactnessReport, ProbeVerdict, SublevelReport,
    BOUNDED_BOX, PROBE_RADII, PROBE_SAMPLES_PER_RADIUS, SUBLEVEL_ENLARGE,
};
pub use kkt::{kkt_check, kkt_check_with, KKT_TOL};
pub use nondegeneracy::{nondegeneracy_test, nondegeneracy_test_with_basis, NondegeneracyReport};
pub use penalty_checks::{check_penalty, PenaltyCertification};
pub use sosc::{sosc_check, sosc_check_with, sosc_matrix, SoscMethod, SoscReport, SoscVerdict};

use crate::auglag::{eval_auglag, ExtendedPoint};
use crate::error::Result;
use crate::problems::NlsdpProblem;
use crate::solver::{SolverConfig, TraceStatus};
use crate::symmat::DEFAULT_RANK_TOL;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Flat certification report. Fields beyond the KKT residuals are `None`
/// when the corresponding check was not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub problem: String,
    pub x: Vec<f64>,
    pub lambda: Option<Vec<Vec<f64>>>,
    pub mu: Vec<f64>,
    pub f: f64,
    pub eta_value: f64,
    /// `‖∇ₓL‖`.
    pub stationarity_residual: f64,
    /// `‖λG(x)‖_F`.
    pub complementarity_residual: f64,
    /// `‖[G(x)]₊‖_F`.
    pub feasibility_g: f64,
    /// `‖h(x)‖`.
    pub feasibility_h: f64,
    pub lambda_min_eigenvalue: Option<f64>,
    pub lambda_psd: bool,
    pub kkt_tol: f64,
    pub kkt: bool,

    pub c: Option<f64>,
    pub merit_value: Option<f64>,
    pub solve_status: Option<TraceStatus>,
    pub stages: Option<usize>,

    pub rank_tol: Option<f64>,
    pub constraint_rank: Option<usize>,
    pub nondegenerate: Option<bool>,
    pub rank_found: Option<usize>,
    pub rank_required: Option<usize>,
    pub singular_values: Option<Vec<f64>>,

    pub sosc: Option<SoscVerdict>,
    pub sosc_method: Option<SoscMethod>,
    pub sosc_tol: Option<f64>,
    pub sosc_min_curvature: Option<f64>,
    pub sosc_directions_tested: Option<usize>,
    pub sosc_directions_admitted: Option<usize>,

    pub bounded: Option<Verdict>,
    pub penalty_type: Option<Verdict>,
    pub local_exactness: Option<Verdict>,
    pub probe_points: Option<usize>,
    pub probe_violations: Option<usize>,

    pub sublevel: Option<ProbeVerdict>,
    pub sublevel_samples: Option<usize>,
    pub sublevel_counterexamples: Option<usize>,

    pub seed: Option<u64>,
    pub certified: bool,
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn empty(problem: &str) -> Self {
        CertificationReport {
            problem: problem.to_string(),
            x: Vec::new(),
            lambda: None,
            mu: Vec::new(),
            f: 0.0,
            eta_value: 0.0,
            stationarity_residual: 0.0,
            complementarity_residual: 0.0,
            feasibility_g: 0.0,
            feasibility_h: 0.0,
            lambda_min_eigenvalue: None,
            lambda_psd: true,
            kkt_tol: KKT_TOL,
            kkt: false,
            c: None,
            merit_value: None,
            solve_status: None,
            stages: None,
            rank_tol: None,
            constraint_rank: None,
            nondegenerate: None,
            rank_found: None,
            rank_required: None,
            singular_values: None,
            sosc: None,
            sosc_method: None,
            sosc_tol: None,
            sosc_min_curvature: None,
            sosc_directions_tested: None,
            sosc_directions_admitted: None,
            bounded: None,
            penalty_type: None,
            local_exactness: None,
            probe_points: None,
            probe_violations: None,
            sublevel: None,
            sublevel_samples: None,
            sublevel_counterexamples: None,
            seed: None,
            certified: false,
            notes: Vec::new(),
        }
    }

    pub fn set_nondegeneracy(&mut self, r: &NondegeneracyReport) {
        self.rank_tol = Some(r.rank_tol);
        self.constraint_rank = Some(r.constraint_rank);
        self.nondegenerate = Some(r.nondegenerate);
        self.rank_found = Some(r.rank_found);
        self.rank_required = Some(r.rank_required);
        self.singular_values = Some(r.singular_values.clone());
    }

    pub fn set_sosc(&mut self, r: &SoscReport) {
        self.sosc = Some(r.verdict);
        self.sosc_method = Some(r.method);
        self.sosc_tol = Some(r.tol);
        self.sosc_min_curvature = r.min_curvature;
        self.sosc_directions_tested = Some(r.directions_tested);
        self.sosc_directions_admitted = Some(r.directions_admitted);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub rank_tol: f64,
    pub sosc_tol: f64,
    pub num_directions: usize,
    pub seed: u64,
    pub sublevel_samples: usize,
    /// Half-width of the sublevel reference box around the certified point.
    pub sublevel_half_width: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            rank_tol: DEFAULT_RANK_TOL,
            sosc_tol: 1e-8,
            num_directions: 200,
            seed: 0,
            sublevel_samples: 10_000,
            sublevel_half_width: 2.0,
        }
    }
}

/// Full pipeline: exactness sweep, KKT check at the selected stage minimizer,
/// nondegeneracy, SOSC and the sublevel screen. `certified` requires every
/// check to pass (an inconclusive probe does not count against it).
pub fn certify_problem(
    problem: &NlsdpProblem,
    start: &ExtendedPoint,
    config: &SolverConfig,
    opts: &CertifyOptions,
) -> Result<CertificationReport> {
    let sweep = exactness_sweep(problem, start, config, opts.seed)?;
    let trace = &sweep.trace;
    let Some(stage) = trace.certified().or(trace.last()) else {
        let mut r = CertificationReport::empty(problem.name());
        r.solve_status = Some(trace.status);
        r.stages = Some(0);
        r.seed = Some(opts.seed);
        r.notes.push("empty c schedule: nothing to certify".into());
        return Ok(r);
    };
    let point = &stage.point;
    let mut r = kkt_check(problem, point)?;
    r.c = Some(stage.c);
    r.merit_value = eval_auglag(problem, point, stage.c, false)?.value.finite();
    r.solve_status = Some(trace.status);
    r.stages = Some(trace.stages.len());
    r.seed = Some(opts.seed);

    let nd = nondegeneracy_test(problem, &point.x, opts.rank_tol)?;
    r.set_nondegeneracy(&nd);
    if !nd.nondegenerate {
        r.notes.push(format!("nondegeneracy: {}", nd.reason));
    }

    if r.kkt {
        let s = sosc_check_with(problem, point, opts.sosc_tol, opts.num_directions, opts.seed, opts.rank_tol)?;
        if s.method == SoscMethod::Sampled {
            r.notes.push("sosc: sampled over critical-cone directions".into());
        }
        r.set_sosc(&s);
    } else {
        r.notes.push("sosc skipped: point is not KKT".into());
    }

    r.bounded = Some(sweep.bounded);
    r.penalty_type = Some(sweep.penalty_type);
    r.local_exactness = Some(sweep.local_exactness);
    r.probe_points = Some(sweep.probe_points);
    r.probe_violations = Some(sweep.probe_violations);
    r.notes.extend(sweep.notes.iter().cloned());

    if problem.f_star.is_some() {
        let reference: Vec<(f64, f64)> = point
            .to_coords()
            .iter()
            .map(|v| (v - opts.sublevel_half_width, v + opts.sublevel_half_width))
            .collect();
        let sl = sublevel_probe(problem, stage.c, &reference, opts.sublevel_samples, opts.seed)?;
        r.sublevel = Some(sl.verdict);
        r.sublevel_samples = Some(sl.samples);
        r.sublevel_counterexamples = Some(sl.counterexamples);
    } else {
        r.notes.push("sublevel probe skipped: f* unknown".into());
    }

    r.certified = trace.status == TraceStatus::Certified
        && r.kkt
        && r.nondegenerate == Some(true)
        && r.sosc.is_some_and(SoscVerdict::passed)
        && sweep.bounded == Verdict::Pass
        && sweep.penalty_type == Verdict::Pass
        && sweep.local_exactness != Verdict::Fail
        && r.sublevel != Some(ProbeVerdict::CounterexampleFound);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{registry_get, Params};
    use crate::symmat::SymMatrix;

    fn nlsdp(name: &str) -> NlsdpProblem {
        registry_get(name, &Params::new()).unwrap().into_nlsdp().unwrap()
    }

    fn known(p: &NlsdpProblem) -> ExtendedPoint {
        p.known_solutions[0].clone()
    }

    #[test]
    fn kkt_examples() {
        let p = nlsdp("scalar-lmi");
        let r = kkt_check(&p, &known(&p)).unwrap();
        assert!(r.kkt && r.lambda_psd);
        for v in [r.eta_value, r.stationarity_residual, r.complementarity_residual, r.feasibility_g] {
            assert!(v <= 1e-12);
        }
        let xi = ExtendedPoint::new(vec![0.5], Some(SymMatrix::diag(&[0.5])), vec![]);
        let r = kkt_check(&p, &xi).unwrap();
        assert_eq!(r.stationarity_residual, 0.5);
        assert!(!r.kkt);

        let p = nlsdp("unconstrained-quadratic");
        let xi = ExtendedPoint::new(vec![1.0, -2.0], None, vec![]);
        let r = kkt_check(&p, &xi).unwrap();
        assert_eq!(r.eta_value, 0.0);
        assert!(r.kkt);
    }

    #[test]
    fn nondegeneracy_examples() {
        let p = nlsdp("scalar-lmi");
        let r = nondegeneracy_test(&p, &[0.0], 1e-9).unwrap();
        assert!(r.nondegenerate);
        assert_eq!((r.rank_found, r.rank_required), (1, 1));

        let p = nlsdp("diag2-degenerate");
        let r = nondegeneracy_test(&p, &[0.0, 0.0], 1e-9).unwrap();
        assert!(!r.nondegenerate);
        assert_eq!(r.rank_required, 3);

        let p = nlsdp("eq-quadratic");
        let r = nondegeneracy_test(&p, &[1.0], 1e-9).unwrap();
        assert!(r.nondegenerate);
        assert_eq!(r.constraint_rank, 0);
    }

    #[test]
    fn sosc_examples() {
        let p = nlsdp("scalar-lmi");
        let r = sosc_check(&p, &known(&p), 1e-8, 50, 1).unwrap();
        assert_eq!(r.verdict, SoscVerdict::PassVacuous);
        assert_eq!(r.linear_cone_dim, 0);

        let p = nlsdp("eq-quadratic");
        let r = sosc_check(&p, &known(&p), 1e-8, 50, 1).unwrap();
        assert_eq!(r.verdict, SoscVerdict::PassVacuous);
        assert_eq!(r.theta, vec![vec![2.0]]);

        let p = nlsdp("box-qp-sdp");
        let xi = ExtendedPoint::new(
            vec![1.0, 0.0, 0.7],
            Some(SymMatrix::diag(&[0.0, 1.0, 0.0])),
            vec![],
        );
        let r = sosc_check(&p, &xi, 1e-8, 50, 1).unwrap();
        assert_eq!(r.verdict, SoscVerdict::Pass);
        assert!((r.min_curvature.unwrap() - 2.0).abs() < 1e-12);

        let bad = ExtendedPoint::new(vec![0.5], Some(SymMatrix::diag(&[0.5])), vec![]);
        assert!(sosc_check(&nlsdp("scalar-lmi"), &bad, 1e-8, 10, 1).is_err());
    }

    #[test]
    fn sweep_examples() {
        let cfg = SolverConfig::default();
        let p = nlsdp("scalar-lmi");
        let r = exactness_sweep(&p, &p.default_start, &cfg, 3).unwrap();
        assert_eq!(r.bounded, Verdict::Pass);
        assert_eq!(r.penalty_type, Verdict::Pass);
        assert_eq!(r.local_exactness, Verdict::Pass, "{:?}", r.notes);

        let p = nlsdp("diag2-degenerate");
        let r = exactness_sweep(&p, &p.default_start, &cfg, 3).unwrap();
        assert_eq!(r.nondegeneracy.as_ref().map(|n| n.nondegenerate), Some(false));
        assert!(r.final_feasibility.is_some());

        let p = nlsdp("unconstrained-quadratic");
        let r = exactness_sweep(&p, &p.default_start, &cfg, 3).unwrap();
        assert_eq!(r.trace.status, TraceStatus::Certified);
    }

    #[test]
    fn sublevel_examples() {
        let p = nlsdp("scalar-lmi");
        let b = [(-2.0, 2.0); 2];
        let r = sublevel_probe(&p, 10.0, &b, 10_000, 5).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::NoCounterexampleFound);
        let r = sublevel_probe(&p, 10.0, &b, 0, 5).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Inconclusive);
        assert!(sublevel_probe(&nlsdp("box-qp-sdp"), 10.0, &[(-1.0, 1.0); 4], 10, 5).is_err());
    }

    #[test]
    fn certify_verdicts() {
        let cfg = SolverConfig::default();
        let opts = CertifyOptions {
            sublevel_samples: 2000,
            ..CertifyOptions::default()
        };
        for (name, nondeg, certified) in [
            ("scalar-lmi", true, true),
            ("eq-quadratic", true, true),
            ("diag2-degenerate", false, false),
        ] {
            let p = nlsdp(name);
            let r = certify_problem(&p, &p.default_start, &cfg, &opts).unwrap();
            assert_eq!(r.nondegenerate, Some(nondeg), "{name}: {r:?}");
            assert_eq!(r.certified, certified, "{name}: {r:?}");
        }
    }
}
