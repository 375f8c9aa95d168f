use crate::error::{Error, Result};
use crate::problems::NlsdpProblem;
use crate::symmat::{null_basis, svd_right, Matrix, SymMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub nondegenerate: bool,
    /// `r = rank G(x*)`.
    pub constraint_rank: usize,
    /// `(l − r)(l − r + 1)/2 + s`.
    pub rank_required: usize,
    pub rank_found: usize,
    pub dim: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank_tol: f64,
    pub reason: String,
}

/// Linear independence of the vectors
/// `v_ij = (e_iᵀ D_k G(x*) e_j)_k`, `i ≤ j`, over an orthonormal basis `e` of
/// `ker G(x*)`, together with the gradients `∇h_k(x*)`.
///
/// Independence is decided by `σ_min > rank_tol · max(1, σ_max)` of the
/// stacked vectors; the test fails outright when there are more than `d`.
pub fn nondegeneracy_test(problem: &NlsdpProblem, x_star: &[f64], rank_tol: f64) -> Result<NondegeneracyReport> {
    problem.check_x(x_star)?;
    let (basis, rank) = match problem.g(x_star) {
        Some(g) => {
            if !g.is_finite() {
                return Err(Error::NonFinite("constraint at x*".into()));
            }
            let nb = null_basis(&g, rank_tol)?;
            (Some(nb.basis), nb.rank)
        }
        None => (None, 0),
    };
    assess(problem, x_star, basis.as_ref(), rank, rank_tol)
}

/// As [`nondegeneracy_test`] with a caller-supplied orthonormal null basis
/// (columns) of `G(x*)`.
pub fn nondegeneracy_test_with_basis(
    problem: &NlsdpProblem,
    x_star: &[f64],
    basis: &Matrix,
    rank_tol: f64,
) -> Result<NondegeneracyReport> {
    problem.check_x(x_star)?;
    if basis.rows() != problem.block_dim() {
        return Err(Error::DimensionMismatch {
            context: "null basis rows",
            expected: problem.block_dim(),
            found: basis.rows(),
        });
    }
    let rank = problem.block_dim() - basis.cols();
    assess(problem, x_star, Some(basis), rank, rank_tol)
}

/// Restrictions `E₀ᵀ D_k G E₀` of all constraint partials.
pub(crate) fn restricted_partials(partials: &[SymMatrix], basis: &Matrix) -> Vec<SymMatrix> {
    partials
        .iter()
        .map(|p| p.congruence(basis).expect("basis rows match block size"))
        .collect()
}

fn assess(
    problem: &NlsdpProblem,
    x_star: &[f64],
    basis: Option<&Matrix>,
    rank: usize,
    rank_tol: f64,
) -> Result<NondegeneracyReport> {
    let d = problem.dim();
    let s = problem.eq_count();
    let k = basis.map_or(0, Matrix::cols);
    let required = k * (k + 1) / 2 + s;
    let mut report = NondegeneracyReport {
        nondegenerate: false,
        constraint_rank: rank,
        rank_required: required,
        rank_found: 0,
        dim: d,
        singular_values: Vec::new(),
        rank_tol,
        reason: String::new(),
    };
    if required > d {
        report.reason = format!("{required} vectors in R^{d}: count exceeds dimension");
        return Ok(report);
    }
    if required == 0 {
        report.nondegenerate = true;
        report.reason = "no active directions: vacuously nondegenerate".into();
        return Ok(report);
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(required);
    if let (Some(e0), true) = (basis, k > 0) {
        let restricted = restricted_partials(&problem.dg(x_star), e0);
        for i in 0..k {
            for j in i..k {
                vectors.push(restricted.iter().map(|m| m.get(i, j)).collect());
            }
        }
    }
    let jac = problem.jac_h(x_star);
    for r in 0..s {
        vectors.push(jac.row(r).to_vec());
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nondegeneracy vectors".into()));
    }
    let (mut sigma, _) = svd_right(&Matrix::from_columns(&vectors, d));
    sigma.sort_by(|a, b| b.total_cmp(a));
    let cut = rank_tol * sigma[0].max(1.0);
    report.rank_found = sigma.iter().filter(|&&v| v > cut).count();
    report.nondegenerate = report.rank_found == required;
    report.reason = format!(
        "rank {} of {required} (sigma_min {:.3e}, cutoff {:.3e})",
        report.rank_found,
        sigma[sigma.len() - 1],
        cut
    );
    report.singular_values = sigma;
    Ok(report)
}
