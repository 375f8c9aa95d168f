use super::kkt::{kkt_check, KKT_TOL};
use super::nondegeneracy::restricted_partials;
use crate::auglag::{hessian_x_lagrangian, ExtendedPoint};
use crate::error::{Error, Result};
use crate::problems::NlsdpProblem;
use crate::symmat::{
    dot, eig_sym, matrix_null_space, null_basis, pseudoinverse, Matrix, SymMatrix, DEFAULT_RANK_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoscVerdict {
    Pass,
    PassVacuous,
    Fail,
}

impl SoscVerdict {
    pub fn passed(self) -> bool {
        self != SoscVerdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoscMethod {
    /// Cone is a linear subspace; decided by a restricted eigenvalue.
    Exact,
    /// Cone has a matrix-inequality part; decided on tested directions only.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoscReport {
    pub verdict: SoscVerdict,
    pub method: SoscMethod,
    /// `Θ = ∇²ₓₓL − 2[trace(λ D_iG G† D_jG)]`.
    pub theta: Vec<Vec<f64>>,
    /// Dimension of `{v : ∇h v = 0, ⟨∇f, v⟩ = 0}`.
    pub linear_cone_dim: usize,
    pub directions_tested: usize,
    pub directions_admitted: usize,
    /// Smallest `⟨v, Θv⟩/‖v‖²` over admitted directions.
    pub min_curvature: Option<f64>,
    pub tol: f64,
    pub rank_tol: f64,
}

/// `Θ(x*, λ*)`; `G†` is cut at `rank_tol`.
pub fn sosc_matrix(problem: &NlsdpProblem, xi: &ExtendedPoint, rank_tol: f64) -> Result<Matrix> {
    let d = problem.dim();
    let hess = hessian_x_lagrangian(problem, xi)?;
    let (Some(lam), Some(g)) = (&xi.lambda, problem.g(&xi.x)) else {
        return Ok(hess);
    };
    let pinv = pseudoinverse(&g, rank_tol)?.as_matrix();
    let partials = problem.dg(&xi.x);
    let lam = lam.as_matrix();
    let left: Vec<Matrix> = partials
        .iter()
        .map(|gi| lam.matmul(&gi.as_matrix()).matmul(&pinv))
        .collect();
    // trace(A·B) for symmetric B is the Frobenius pairing of A with B.
    let trace_term = |i: usize, j: usize| {
        let l = &left[i];
        let mut tr = 0.0;
        for a in 0..l.rows() {
            for b in 0..l.cols() {
                tr += l[(a, b)] * partials[j].get(b, a);
            }
        }
        tr
    };
    let theta = Matrix::from_fn(d, d, |i, j| hess[(i, j)] - 2.0 * trace_term(i, j));
    Ok(Matrix::from_fn(d, d, |i, j| 0.5 * (theta[(i, j)] + theta[(j, i)])))
}

fn curvature(theta: &Matrix, v: &[f64]) -> f64 {
    dot(v, &theta.matvec(v)) / dot(v, v)
}

/// Second-order sufficient condition on the critical cone
/// `{v : λ_max(Σ vᵢ E₀ᵀD_iG E₀) ≤ tol, ∇h v = 0, ⟨∇f, v⟩ = 0}`.
///
/// Without a matrix-inequality part the cone is a subspace and the check is
/// exact. Otherwise directions are the basis of the linear part, their
/// negatives and pairwise sums/differences, plus `num_directions` seeded random
/// combinations; `PassVacuous` then means no tested direction was admitted.
pub fn sosc_check(
    problem: &NlsdpProblem,
    xi_star: &ExtendedPoint,
    tol: f64,
    num_directions: usize,
    seed: u64,
) -> Result<SoscReport> {
    sosc_check_with(problem, xi_star, tol, num_directions, seed, DEFAULT_RANK_TOL)
}

pub fn sosc_check_with(
    problem: &NlsdpProblem,
    xi_star: &ExtendedPoint,
    tol: f64,
    num_directions: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<SoscReport> {
    let kkt = kkt_check(problem, xi_star)?;
    if !kkt.kkt {
        return Err(Error::NotKkt(format!(
            "residuals exceed {KKT_TOL:e}: stationarity {:.3e}, complementarity {:.3e}, feasibility ({:.3e}, {:.3e})",
            kkt.stationarity_residual, kkt.complementarity_residual, kkt.feasibility_g, kkt.feasibility_h
        )));
    }
    let x = &xi_star.x;
    let d = problem.dim();
    let theta = sosc_matrix(problem, xi_star, rank_tol)?;

    let jac = problem.jac_h(x);
    let mut rows: Vec<Vec<f64>> = (0..jac.rows()).map(|r| jac.row(r).to_vec()).collect();
    rows.push(problem.grad_f(x));
    let nspace = matrix_null_space(&Matrix::from_rows(&rows)?, rank_tol);
    let k = nspace.cols();

    let restricted = match problem.g(x) {
        Some(g) => {
            let nb = null_basis(&g, rank_tol)?;
            if nb.basis.cols() > 0 {
                Some(restricted_partials(&problem.dg(x), &nb.basis))
            } else {
                None
            }
        }
        None => None,
    };

    let mut report = SoscReport {
        verdict: SoscVerdict::PassVacuous,
        method: if restricted.is_some() {
            SoscMethod::Sampled
        } else {
            SoscMethod::Exact
        },
        theta: (0..d).map(|i| theta.row(i).to_vec()).collect(),
        linear_cone_dim: k,
        directions_tested: 0,
        directions_admitted: 0,
        min_curvature: None,
        tol,
        rank_tol,
    };
    if k == 0 {
        report.method = SoscMethod::Exact;
        return Ok(report);
    }

    let Some(restricted) = restricted else {
        let reduced = Matrix::from_fn(k, k, |i, j| {
            let vi = nspace.column(i);
            dot(&vi, &theta.matvec(&nspace.column(j)))
        });
        let reduced = SymMatrix::from_upper(k, |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
        let m = eig_sym(&reduced)?.min_eigenvalue();
        report.directions_tested = k;
        report.directions_admitted = k;
        report.min_curvature = Some(m);
        report.verdict = if m >= tol { SoscVerdict::Pass } else { SoscVerdict::Fail };
        return Ok(report);
    };

    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    let unit = |i: usize| (0..k).map(|j| f64::from(i == j)).collect::<Vec<f64>>();
    for i in 0..k {
        coeffs.push(unit(i));
        coeffs.push(unit(i).iter().map(|v| -v).collect());
        for j in (i + 1)..k {
            for sign in [1.0, -1.0] {
                coeffs.push((0..k).map(|t| f64::from(t == i) + sign * f64::from(t == j)).collect());
                coeffs.push((0..k).map(|t| -f64::from(t == i) - sign * f64::from(t == j)).collect());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..num_directions {
        coeffs.push((0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    }

    let mut min_curv = f64::INFINITY;
    for u in &coeffs {
        let mut v = nspace.matvec(u);
        let n = dot(&v, &v).sqrt();
        if !(n > 0.0) {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= n);
        report.directions_tested += 1;
        let mut m = SymMatrix::zeros(restricted[0].dim());
        for (vi, r) in v.iter().zip(&restricted) {
            m = m.add_scaled(*vi, r);
        }
        let lmax = eig_sym(&m)?.eigenvalues.last().copied().unwrap_or(0.0);
        if lmax <= tol {
            report.directions_admitted += 1;
            min_curv = min_curv.min(curvature(&theta, &v));
        }
    }
    if report.directions_admitted > 0 {
        report.min_curvature = Some(min_curv);
        report.verdict = if min_curv >= tol { SoscVerdict::Pass } else { SoscVerdict::Fail };
    }
    Ok(report)
}
