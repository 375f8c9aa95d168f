use exact_merit::auglag::{eta, eval_auglag, eval_auglag_coords, feasibility_residuals, ExtendedPoint};
use exact_merit::certify::{
    certify_problem, check_penalty, nondegeneracy_test, nondegeneracy_test_with_basis, CertifyOptions,
};
use exact_merit::oracle::{grid_min, refine_min};
use exact_merit::problems::{
    registry, registry_get, validate_derivatives, NlsdpProblem, Params, ProblemKind, ProblemSpec,
};
use exact_merit::solver::{continuation_solve, minimize_extended, SolverConfig, TraceStatus};
use exact_merit::symmat::{null_basis, Matrix, SymMatrix};
use exact_merit::{Error, ExtReal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nlsdp(name: &str) -> NlsdpProblem {
    registry_get(name, &Params::new()).unwrap().into_nlsdp().unwrap()
}

fn all_nlsdp() -> Vec<NlsdpProblem> {
    registry()
        .iter()
        .filter(|e| e.kind == ProblemKind::Nlsdp)
        .map(|e| nlsdp(e.name))
        .collect()
}

fn value(problem: &NlsdpProblem, z: &[f64], c: f64) -> ExtReal {
    eval_auglag_coords(problem, z, c, false).map_or(ExtReal::PosInfinity, |r| r.0)
}

#[test]
fn registry_derivatives_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for problem in all_nlsdp() {
        for _ in 0..5 {
            let x: Vec<f64> = (0..problem.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let report = validate_derivatives(&problem, &x, 1e-6).unwrap();
            assert!(report.max_error() <= 1e-5, "{}: {:?}", problem.name(), report);
        }
    }
}

#[test]
fn known_solutions_are_kkt_points() {
    for problem in all_nlsdp() {
        assert!(!problem.known_solutions.is_empty(), "{}", problem.name());
        for xi in &problem.known_solutions {
            let (fg, fh) = feasibility_residuals(&problem, &xi.x).unwrap();
            assert!(fg <= 1e-12 && fh <= 1e-12, "{}", problem.name());
            assert!(eta(&problem, xi).unwrap() <= 1e-12, "{}", problem.name());
        }
    }
}

#[test]
fn eta_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for problem in all_nlsdp() {
        let n = problem.extended_len();
        for _ in 0..200 {
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xi = ExtendedPoint::from_coords(&problem, &z);
            assert!(eta(&problem, &xi).unwrap() >= 0.0);
        }
    }
}

#[test]
fn problem_files_round_trip() {
    let text = r#"{"name": "box-qp-sdp", "params": {"x0": [2.0, -1.0]}, "alpha": 0.5}"#;
    let spec = ProblemSpec::from_json(text).unwrap();
    let again = ProblemSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(spec, again);
    let p = spec.build().unwrap().into_nlsdp().unwrap();
    assert_eq!((p.dim(), p.block_dim(), p.alpha()), (2, 2, 0.5));
    assert_eq!(p.known_solutions[0].x, vec![2.0, 0.0]);

    assert!(ProblemSpec::from_json(r#"{"name": "scalar-lmi", "extra": 1}"#).is_err());
    let unknown = ProblemSpec::named("nosuch").build().unwrap_err();
    assert!(matches!(unknown, Error::UnknownProblem { ref available, .. } if available.len() == registry().len()));
    let mut bad = Params::new();
    bad.insert("x0".into(), 1.into());
    assert!(registry_get("scalar-lmi", &bad).is_err());
}

#[test]
fn stages_do_not_exceed_warm_start_value() {
    for problem in all_nlsdp() {
        let trace = continuation_solve(&problem, &problem.default_start, &SolverConfig::default()).unwrap();
        for s in &trace.stages {
            if let ExtReal::Finite(start) = s.start_value {
                assert!(s.value <= start + 1e-12, "{} at c = {}", problem.name(), s.c);
            }
        }
    }
}

#[test]
fn accepted_steps_satisfy_armijo() {
    for problem in all_nlsdp() {
        let sol = minimize_extended(&problem, 10.0, &problem.default_start, &SolverConfig::default()).unwrap();
        for s in &sol.steps {
            assert!(s.after < s.before, "{}", problem.name());
            assert!(s.after <= s.before + s.armijo_margin, "{}", problem.name());
        }
    }
}

#[test]
fn certified_minimizers_match_known_solutions() {
    for problem in all_nlsdp() {
        let trace = continuation_solve(&problem, &problem.default_start, &SolverConfig::default()).unwrap();
        assert_eq!(trace.status, TraceStatus::Certified, "{}", problem.name());
        let stage = trace.certified().unwrap();
        let close = problem.known_solutions.iter().any(|k| {
            k.x.iter().zip(&stage.point.x).all(|(a, b)| (a - b).abs() <= 1e-4)
        });
        assert!(close, "{}: {:?}", problem.name(), stage.point.x);
        assert!((stage.f - problem.f_star.unwrap()).abs() <= 1e-6, "{}", problem.name());
    }
}

#[test]
fn box_qp_solution_is_orthant_projection() {
    let mut params = Params::new();
    params.insert("x0".into(), serde_json::json!([-1.5, 0.25, 2.0, -0.1]));
    let problem = registry_get("box-qp-sdp", &params).unwrap().into_nlsdp().unwrap();
    let trace = continuation_solve(&problem, &problem.default_start, &SolverConfig::default()).unwrap();
    let x = &trace.certified().unwrap().point.x;
    for (a, b) in x.iter().zip([0.0, 0.25, 2.0, 0.0]) {
        assert!((a - b).abs() <= 1e-5, "{x:?}");
    }
}

#[test]
fn eta_is_positive_off_the_multiplier() {
    // Spacing 0.1 around λ̄ = 1 at x* = 0.
    let problem = nlsdp("scalar-lmi");
    let mut min_off = f64::INFINITY;
    for k in -40i32..=40 {
        if k == 0 {
            continue;
        }
        let lambda = 1.0 + 0.1 * f64::from(k);
        let xi = ExtendedPoint::new(vec![0.0], Some(SymMatrix::diag(&[lambda])), vec![]);
        min_off = min_off.min(eta(&problem, &xi).unwrap());
    }
    assert!(min_off >= 1e-6, "{min_off}");
}

/// Gram–Schmidt on a random square matrix.
fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < k {
        let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            cols.push(v.iter().map(|a| a / n).collect());
        }
    }
    Matrix::from_columns(&cols, k)
}

#[test]
fn nondegeneracy_ignores_null_basis_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, x) in [("diag2-degenerate", vec![0.0, 0.0]), ("box-qp-sdp", vec![1.0, 0.0, 0.7])] {
        let problem = nlsdp(name);
        let e0 = null_basis(&problem.g(&x).unwrap(), 1e-9).unwrap().basis;
        let reference = nondegeneracy_test(&problem, &x, 1e-9).unwrap();
        for _ in 0..5 {
            let other = e0.matmul(&random_orthogonal(&mut rng, e0.cols()));
            let r = nondegeneracy_test_with_basis(&problem, &x, &other, 1e-9).unwrap();
            assert_eq!(r.nondegenerate, reference.nondegenerate, "{name}");
            assert_eq!(r.rank_found, reference.rank_found, "{name}");
        }
    }
}

/// The continuation run stops at its first certified stage, so the largest `c`
/// it visits is that stage's.
#[test]
fn oracle_agrees_with_known_points_at_largest_c() {
    for problem in all_nlsdp() {
        let trace = continuation_solve(&problem, &problem.default_start, &SolverConfig::default()).unwrap();
        let c = trace.last().unwrap().c;
        let known = problem.known_solutions[0].to_coords();
        if known.len() > 8 {
            continue;
        }
        let bounds: Vec<(f64, f64)> = known.iter().map(|v| (v - 1.0, v + 1.03)).collect();
        let eval = |z: &[f64]| value(&problem, z, c);
        let (seed, spacing, grid_value) = if known.len() <= 2 {
            let g = grid_min(eval, &bounds, 201).unwrap();
            (g.point, g.spacing, g.value)
        } else {
            let g = grid_min(eval, &bounds, 5).unwrap();
            (g.point, g.spacing, g.value)
        };
        let r = refine_min(eval, &seed, &spacing, 0.5, 30, 3).unwrap();
        // At a degenerate point the multiplier set is not a singleton, so only x is
        // pinned; the oracle point must still be a KKT pair with value f*.
        let x_star = &problem.known_solutions[0].x;
        let unique = nondegeneracy_test(&problem, x_star, 1e-9).unwrap().nondegenerate;
        let pinned = if unique { known.len() } else { x_star.len() };
        let cells = known[..pinned]
            .iter()
            .zip(&r.point)
            .zip(&r.spacing)
            .map(|((a, b), h)| (a - b).abs() / h)
            .fold(0.0, f64::max);
        println!("{} c = {c}: {cells:.2} cells", problem.name());
        assert!(cells <= 2.0, "{} at c = {c}: {cells} cells", problem.name());
        if !unique {
            let xi = ExtendedPoint::from_coords(&problem, &r.point);
            assert!(eta(&problem, &xi).unwrap() <= 1e-9, "{}", problem.name());
            let v = r.value.finite().unwrap();
            assert!((v - problem.f_star.unwrap()).abs() <= 1e-9, "{}", problem.name());
        }
        let solver_value = trace.last().unwrap().value;
        assert!(solver_value <= grid_value.finite().unwrap() + 1e-9, "{}", problem.name());
    }
}

#[test]
fn certify_verdicts() {
    let opts = CertifyOptions::default();
    let cfg = SolverConfig::default();
    let good = certify_problem(&nlsdp("scalar-lmi"), &nlsdp("scalar-lmi").default_start, &cfg, &opts).unwrap();
    assert!(good.certified);
    assert_eq!(good.nondegenerate, Some(true));
    let degenerate = nlsdp("diag2-degenerate");
    let bad = certify_problem(&degenerate, &degenerate.default_start, &cfg, &opts).unwrap();
    assert!(!bad.certified);
    assert_eq!(bad.nondegenerate, Some(false));
    assert_eq!(bad.solve_status, Some(TraceStatus::Certified));
}

#[test]
fn penalty_certification_on_eq_linear() {
    let p = registry_get("eq-linear", &Params::new()).unwrap().into_penalty().unwrap();
    let cert = check_penalty(&p, &SolverConfig::default()).unwrap();
    assert!(cert.certified, "{:?}", cert.notes);
    let last = cert.trace.stages.last().unwrap();
    assert!(last.p <= 1e-8 && last.x[0].abs() <= 1e-8);
}

#[test]
fn kkt_values_equal_objective() {
    for problem in all_nlsdp() {
        for xi in &problem.known_solutions {
            for c in [0.01, 1.0, 100.0] {
                let v = eval_auglag(&problem, xi, c, false).unwrap().value.finite().unwrap();
                assert!((v - problem.f_star.unwrap()).abs() <= 1e-12, "{}", problem.name());
            }
        }
    }
}
