use super::NlsdpProblem;
use crate::error::{Error, Result};
use crate::symmat::{Matrix, SymMatrix};
use serde::{Deserialize, Serialize};

/// Central-difference gradient of a scalar function.
pub fn central_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + step;
            let fp = f(&xp);
            xp[i] = x[i] - step;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Worst mismatch for one derivative callback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub callback: String,
    /// `max |analytic − fd| / max(1, |fd|)` over all entries.
    pub max_rel_error: f64,
    pub worst_entry: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub checks: Vec<DerivativeCheck>,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.max_rel_error))
    }

    pub fn get(&self, callback: &str) -> Option<&DerivativeCheck> {
        self.checks.iter().find(|c| c.callback == callback)
    }
}

struct Tracker {
    callback: &'static str,
    worst: f64,
    entry: String,
}

impl Tracker {
    fn new(callback: &'static str) -> Self {
        Tracker {
            callback,
            worst: 0.0,
            entry: String::new(),
        }
    }

    fn compare(&mut self, analytic: f64, fd: f64, entry: impl FnOnce() -> String) -> Result<()> {
        if !analytic.is_finite() || !fd.is_finite() {
            return Err(Error::NonFinite(format!("derivative callback `{}`", self.callback)));
        }
        let err = (analytic - fd).abs() / fd.abs().max(1.0);
        if err > self.worst || self.entry.is_empty() {
            self.worst = err.max(self.worst);
            self.entry = entry();
        }
        Ok(())
    }

    fn finish(self) -> DerivativeCheck {
        DerivativeCheck {
            callback: self.callback.to_string(),
            max_rel_error: self.worst,
            worst_entry: self.entry,
        }
    }
}

fn finite_vec(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("callback `{what}`")))
    }
}

/// Compares the analytic derivatives of a problem against central differences.
///
/// Callbacks reported: `f` (gradient), `G` (partials), `h` (Jacobian) and,
/// when the model supplies them, `f_hess`, `G_second`, `h_hess`.
pub fn validate_derivatives(problem: &NlsdpProblem, x: &[f64], step: f64) -> Result<DerivativeReport> {
    problem.check_x(x)?;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be > 0, got {step}")));
    }
    finite_vec(x, "x")?;
    let d = problem.dim();
    let model = problem.model();
    let mut checks = Vec::new();

    let fx = problem.f(x);
    if !fx.is_finite() {
        return Err(Error::NonFinite("callback `f`".into()));
    }
    let grad = problem.grad_f(x);
    finite_vec(&grad, "f")?;
    let fd = central_gradient(|z| problem.f(z), x, step);
    let mut t = Tracker::new("f");
    for i in 0..d {
        t.compare(grad[i], fd[i], || format!("d f / d x{i}"))?;
    }
    checks.push(t.finish());

    let mut xp = x.to_vec();
    let mut shifted = |i: usize, delta: f64| -> Vec<f64> {
        xp.copy_from_slice(x);
        xp[i] += delta;
        xp.clone()
    };

    if problem.block_dim() > 0 {
        let eval_g = |z: &[f64]| -> Result<SymMatrix> {
            let g = problem
                .g(z)
                .ok_or_else(|| Error::NonFinite("callback `G` returned nothing".into()))?;
            if !g.is_finite() {
                return Err(Error::NonFinite("callback `G`".into()));
            }
            Ok(g)
        };
        eval_g(x)?;
        let partials = problem.dg(x);
        if partials.len() != d {
            return Err(Error::DimensionMismatch {
                context: "constraint partials",
                expected: d,
                found: partials.len(),
            });
        }
        let l = problem.block_dim();
        let mut t = Tracker::new("G");
        for (i, part) in partials.iter().enumerate() {
            let gp = eval_g(&shifted(i, step))?;
            let gm = eval_g(&shifted(i, -step))?;
            for a in 0..l {
                for b in a..l {
                    let fd = (gp.get(a, b) - gm.get(a, b)) / (2.0 * step);
                    t.compare(part.get(a, b), fd, || format!("D_x{i} G[{a},{b}]"))?;
                }
            }
        }
        checks.push(t.finish());

        if let Some(second) = model.constraint_second(x) {
            let mut t = Tracker::new("G_second");
            for j in 0..d {
                let pp = model.constraint_partials(&shifted(j, step));
                let pm = model.constraint_partials(&shifted(j, -step));
                for i in 0..d {
                    for a in 0..l {
                        for b in a..l {
                            let fd = (pp[i].get(a, b) - pm[i].get(a, b)) / (2.0 * step);
                            t.compare(second[i][j].get(a, b), fd, || {
                                format!("D_x{i} D_x{j} G[{a},{b}]")
                            })?;
                        }
                    }
                }
            }
            checks.push(t.finish());
        }
    }

    if problem.eq_count() > 0 {
        let s = problem.eq_count();
        finite_vec(&problem.h(x), "h")?;
        let jac = problem.jac_h(x);
        if !jac.is_finite() {
            return Err(Error::NonFinite("callback `h` Jacobian".into()));
        }
        let mut t = Tracker::new("h");
        for i in 0..d {
            let hp = problem.h(&shifted(i, step));
            let hm = problem.h(&shifted(i, -step));
            finite_vec(&hp, "h")?;
            finite_vec(&hm, "h")?;
            for k in 0..s {
                let fd = (hp[k] - hm[k]) / (2.0 * step);
                t.compare(jac[(k, i)], fd, || format!("d h{k} / d x{i}"))?;
            }
        }
        checks.push(t.finish());

        if let Some(hess) = model.equality_hessians(x) {
            let mut t = Tracker::new("h_hess");
            for j in 0..d {
                let jp = model.equality_jacobian(&shifted(j, step));
                let jm = model.equality_jacobian(&shifted(j, -step));
                for k in 0..s {
                    for i in 0..d {
                        let fd = (jp[(k, i)] - jm[(k, i)]) / (2.0 * step);
                        t.compare(hess[k][(i, j)], fd, || format!("d2 h{k} / d x{i} d x{j}"))?;
                    }
                }
            }
            checks.push(t.finish());
        }
    }

    if let Some(hess) = model.objective_hessian(x) {
        let mut t = Tracker::new("f_hess");
        let fd = fd_jacobian(|z| problem.grad_f(z), x, step);
        for i in 0..d {
            for j in 0..d {
                t.compare(hess[(i, j)], fd[(i, j)], || format!("d2 f / d x{i} d x{j}"))?;
            }
        }
        checks.push(t.finish());
    }

    Ok(DerivativeReport { checks })
}

/// Central-difference Jacobian of a vector function; entry `(i, j)` is `∂F_i/∂x_j`.
pub(crate) fn fd_jacobian(mut f: impl FnMut(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> Matrix {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        xp[j] = x[j] + step;
        let fp = f(&xp);
        xp[j] = x[j] - step;
        let fm = f(&xp);
        xp[j] = x[j];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<_>>(),
        );
    }
    let m = cols.first().map_or(0, Vec::len);
    Matrix::from_columns(&cols, m)
}
