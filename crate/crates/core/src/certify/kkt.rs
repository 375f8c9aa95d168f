use super::CertificationReport;
use crate::auglag::{eta, feasibility_residuals, grad_x_lagrangian, ExtendedPoint};
use crate::error::Result;
use crate::problems::NlsdpProblem;
use crate::symmat::{dot, eig_sym};

/// Residual threshold for calling a point KKT. Not prescribed by the theory;
/// recorded in every report.
pub const KKT_TOL: f64 = 1e-6;

/// Residuals and `η` at `xi`, judged against [`KKT_TOL`].
pub fn kkt_check(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<CertificationReport> {
    kkt_check_with(problem, xi, KKT_TOL)
}

pub fn kkt_check_with(problem: &NlsdpProblem, xi: &ExtendedPoint, tol: f64) -> Result<CertificationReport> {
    xi.check(problem)?;
    let x = &xi.x;
    let gl = grad_x_lagrangian(problem, xi)?;
    let stationarity = dot(&gl, &gl).sqrt();
    let complementarity = match (&xi.lambda, problem.g(x)) {
        (Some(l), Some(g)) => l.matmul(&g).frobenius_norm(),
        _ => 0.0,
    };
    let (feas_g, feas_h) = feasibility_residuals(problem, x)?;
    let lambda_min = match &xi.lambda {
        Some(l) => Some(eig_sym(l)?.min_eigenvalue()),
        None => None,
    };
    let lambda_psd = lambda_min.is_none_or(|m| m >= -tol);
    let kkt = stationarity <= tol
        && complementarity <= tol
        && feas_g <= tol
        && feas_h <= tol
        && lambda_psd;
    let mut report = CertificationReport::empty(problem.name());
    report.x = x.clone();
    report.lambda = xi.lambda.as_ref().map(|l| l.to_rows());
    report.mu = xi.mu.clone();
    report.f = problem.f(x);
    report.eta_value = eta(problem, xi)?;
    report.stationarity_residual = stationarity;
    report.complementarity_residual = complementarity;
    report.feasibility_g = feas_g;
    report.feasibility_h = feas_h;
    report.lambda_min_eigenvalue = lambda_min;
    report.lambda_psd = lambda_psd;
    report.kkt_tol = tol;
    report.kkt = kkt;
    Ok(report)
}
