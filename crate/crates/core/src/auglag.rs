//! The exact augmented Lagrangian for nonlinear semidefinite programs.
//!
//! For `ξ = (x, λ, μ)` and `c > 0`,
//!
//! ```text
//! 𝓛(ξ, c) = f(x) + (trace([cG(x) + pλ]₊²) − p² trace(λ²)) / (2cp)
//!          + ⟨μ, h(x)⟩ + c‖h(x)‖² / (2q) + η(ξ)
//! ```
//!
//! with
//!
//! ```text
//! a(x) = α − trace([G(x)]₊²)^κ      p(x, λ) = a(x) / (1 + trace(λ²))
//! b(x) = α − ‖h(x)‖²                q(x, μ) = b(x) / (1 + ‖μ‖²)
//! η(ξ) = ‖∇ₓL(ξ)‖² + trace(λ² G(x)²)
//! ```
//!
//! on `Ω_α = {a > 0, b > 0}` and `+∞` elsewhere. The gradient is assembled
//! by the chain rule from `d/dA trace([A]₊²) = 2[A]₊`.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problems::validate::fd_jacobian;
use crate::problems::{NlsdpProblem, FD_HESSIAN_STEP};
use crate::symmat::{dot, eig_sym, psd_part_norm_sq, Matrix, SymMatrix};
use serde::{Deserialize, Serialize};

/// Extended point `ξ = (x, λ, μ)`. `lambda` is `None` when `l = 0`, `mu` is
/// empty when `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPoint {
    pub x: Vec<f64>,
    pub lambda: Option<SymMatrix>,
    pub mu: Vec<f64>,
}

impl ExtendedPoint {
    pub fn new(x: Vec<f64>, lambda: Option<SymMatrix>, mu: Vec<f64>) -> Self {
        ExtendedPoint { x, lambda, mu }
    }

    pub fn zeros(d: usize, l: usize, s: usize) -> Self {
        ExtendedPoint {
            x: vec![0.0; d],
            lambda: (l > 0).then(|| SymMatrix::zeros(l)),
            mu: vec![0.0; s],
        }
    }

    pub fn zeros_for(problem: &NlsdpProblem) -> Self {
        Self::zeros(problem.dim(), problem.block_dim(), problem.eq_count())
    }

    pub fn check(&self, problem: &NlsdpProblem) -> Result<()> {
        problem.check_x(&self.x)?;
        let l = self.lambda.as_ref().map_or(0, SymMatrix::dim);
        if l != problem.block_dim() {
            return Err(Error::DimensionMismatch {
                context: "multiplier lambda",
                expected: problem.block_dim(),
                found: l,
            });
        }
        if self.mu.len() != problem.eq_count() {
            return Err(Error::DimensionMismatch {
                context: "multiplier mu",
                expected: problem.eq_count(),
                found: self.mu.len(),
            });
        }
        Ok(())
    }

    /// Flattened coordinates: `x`, upper triangle of `λ`, `μ`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        if let Some(lam) = &self.lambda {
            z.extend(lam.to_coords());
        }
        z.extend_from_slice(&self.mu);
        z
    }

    pub fn from_coords(problem: &NlsdpProblem, z: &[f64]) -> Self {
        let d = problem.dim();
        let l = problem.block_dim();
        let nl = SymMatrix::coord_len(l);
        assert_eq!(z.len(), problem.extended_len(), "extended coordinate length");
        ExtendedPoint {
            x: z[..d].to_vec(),
            lambda: (l > 0).then(|| SymMatrix::from_coords(l, &z[d..d + nl])),
            mu: z[d + nl..].to_vec(),
        }
    }

    /// Treats `self` as a gradient (Frobenius gradient in `λ`) and maps it to
    /// the gradient with respect to [`ExtendedPoint::to_coords`].
    pub fn gradient_coords(&self) -> Vec<f64> {
        let mut g = self.x.clone();
        if let Some(lam) = &self.lambda {
            g.extend(lam.gradient_to_coords());
        }
        g.extend_from_slice(&self.mu);
        g
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.mu).all(|v| v.is_finite())
            && self.lambda.as_ref().is_none_or(SymMatrix::is_finite)
    }

    /// Largest coordinate-wise distance.
    pub fn max_abs_diff(&self, other: &ExtendedPoint) -> f64 {
        self.to_coords()
            .iter()
            .zip(other.to_coords())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn lambda_dot_partials(lambda: Option<&SymMatrix>, partials: &[SymMatrix], d: usize) -> Vec<f64> {
    match lambda {
        Some(lam) => partials.iter().map(|gi| lam.inner(gi)).collect(),
        None => vec![0.0; d],
    }
}

/// `L(x, λ, μ) = f(x) + trace(λG(x)) + ⟨μ, h(x)⟩`.
pub fn lagrangian(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<f64> {
    xi.check(problem)?;
    let mut v = problem.f(&xi.x);
    if let (Some(lam), Some(g)) = (&xi.lambda, problem.g(&xi.x)) {
        v += lam.inner(&g);
    }
    v += dot(&xi.mu, &problem.h(&xi.x));
    Ok(v)
}

/// `∇ₓL(x, λ, μ)`, with components `∇f_i + trace(λ D_{x_i}G) + ⟨μ, ∂h/∂x_i⟩`.
pub fn grad_x_lagrangian(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<Vec<f64>> {
    xi.check(problem)?;
    Ok(grad_x_lagrangian_unchecked(problem, &xi.x, xi.lambda.as_ref(), &xi.mu))
}

fn grad_x_lagrangian_unchecked(
    problem: &NlsdpProblem,
    x: &[f64],
    lambda: Option<&SymMatrix>,
    mu: &[f64],
) -> Vec<f64> {
    let d = problem.dim();
    let mut g = problem.grad_f(x);
    let tl = lambda_dot_partials(lambda, &problem.dg(x), d);
    let jt = problem.jac_h(x).tr_matvec(mu);
    for i in 0..d {
        g[i] += tl[i] + jt[i];
    }
    g
}

/// `∇²ₓₓL(x, λ, μ)`. Uses the model's second derivatives when every needed
/// one is available, otherwise central differences of `∇ₓL` with step `1e-5`.
pub fn hessian_x_lagrangian(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<Matrix> {
    xi.check(problem)?;
    Ok(hessian_x_lagrangian_unchecked(problem, &xi.x, xi.lambda.as_ref(), &xi.mu))
}

fn hessian_x_lagrangian_unchecked(
    problem: &NlsdpProblem,
    x: &[f64],
    lambda: Option<&SymMatrix>,
    mu: &[f64],
) -> Matrix {
    let d = problem.dim();
    let model = problem.model();
    let analytic = (|| {
        let mut hess = model.objective_hessian(x)?;
        if let Some(lam) = lambda {
            let second = model.constraint_second(x)?;
            for i in 0..d {
                for j in 0..d {
                    hess[(i, j)] += lam.inner(&second[i][j]);
                }
            }
        }
        if !mu.is_empty() {
            let hh = model.equality_hessians(x)?;
            for (k, hk) in hh.iter().enumerate() {
                hess = hess.add_scaled(mu[k], hk);
            }
        }
        Some(hess)
    })();
    match analytic {
        Some(h) => h,
        None => {
            let j = fd_jacobian(
                |z| grad_x_lagrangian_unchecked(problem, z, lambda, mu),
                x,
                FD_HESSIAN_STEP,
            );
            Matrix::from_fn(d, d, |a, b| 0.5 * (j[(a, b)] + j[(b, a)]))
        }
    }
}

/// `η(x, λ, μ) = ‖∇ₓL‖² + trace(λ²G(x)²)`.
pub fn eta(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<f64> {
    let gl = grad_x_lagrangian(problem, xi)?;
    let mut v = dot(&gl, &gl);
    if let (Some(lam), Some(g)) = (&xi.lambda, problem.g(&xi.x)) {
        v += lam.matmul(&g).frobenius_norm().powi(2);
    }
    Ok(v)
}

/// `(‖[G(x)]₊‖_F, ‖h(x)‖)`.
pub fn feasibility_residuals(problem: &NlsdpProblem, x: &[f64]) -> Result<(f64, f64)> {
    problem.check_x(x)?;
    let fg = match problem.g(x) {
        Some(g) => psd_part_norm_sq(&eig_sym(&g)?).sqrt(),
        None => 0.0,
    };
    let h = problem.h(x);
    Ok((fg, dot(&h, &h).sqrt()))
}

/// `a, b, p, q` and membership in `Ω_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalings {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub in_domain: bool,
}

pub fn scalings(problem: &NlsdpProblem, xi: &ExtendedPoint) -> Result<Scalings> {
    xi.check(problem)?;
    let alpha = problem.alpha();
    let a = match problem.g(&xi.x) {
        Some(g) => alpha - psd_part_norm_sq(&eig_sym(&g)?).powf(problem.kappa()),
        None => alpha,
    };
    let h = problem.h(&xi.x);
    let b = alpha - dot(&h, &h);
    let tl2 = xi.lambda.as_ref().map_or(0.0, SymMatrix::norm_sq);
    Ok(Scalings {
        a,
        b,
        p: a / (1.0 + tl2),
        q: b / (1.0 + dot(&xi.mu, &xi.mu)),
        in_domain: a > 0.0 && b > 0.0,
    })
}

/// Additive pieces of a finite merit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugLagComponents {
    pub f: f64,
    /// `(trace([cG + pλ]₊²) − p² trace(λ²)) / (2cp)`.
    pub penalty_trace: f64,
    /// `⟨μ, h⟩`.
    pub mu_h: f64,
    /// `c‖h‖² / (2q)`.
    pub eq_quadratic: f64,
    pub eta: f64,
}

impl AugLagComponents {
    pub fn sum(&self) -> f64 {
        self.f + self.penalty_trace + self.mu_h + self.eq_quadratic + self.eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugLagEval {
    pub value: ExtReal,
    /// Frobenius gradient in `λ`; `None` when not requested or when the value is `+∞`.
    pub gradient: Option<ExtendedPoint>,
    /// `None` outside `Ω_α`.
    pub components: Option<AugLagComponents>,
    pub scalings: Scalings,
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("augmented Lagrangian component `{what}`")))
    }
}

/// Evaluates `𝓛(ξ, c)` and optionally its gradient.
pub fn eval_auglag(
    problem: &NlsdpProblem,
    xi: &ExtendedPoint,
    c: f64,
    want_gradient: bool,
) -> Result<AugLagEval> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("penalty parameter c must be > 0, got {c}")));
    }
    xi.check(problem)?;
    if !xi.is_finite() {
        return Err(Error::NonFinite("extended point".into()));
    }
    let x = &xi.x;
    let d = problem.dim();
    let alpha = problem.alpha();
    let kappa = problem.kappa();
    let lambda = xi.lambda.as_ref();
    let mu = &xi.mu;

    let gmat = problem.g(x);
    let (g_eig, delta_g) = match &gmat {
        Some(g) => {
            if !g.is_finite() {
                return Err(Error::NonFinite("augmented Lagrangian component `G`".into()));
            }
            let e = eig_sym(g)?;
            let dg = psd_part_norm_sq(&e);
            (Some(e), dg)
        }
        None => (None, 0.0),
    };
    let a = alpha - delta_g.powf(kappa);
    let h = problem.h(x);
    let nh2 = finite(dot(&h, &h), "h")?;
    let b = alpha - nh2;
    let tl2 = lambda.map_or(0.0, SymMatrix::norm_sq);
    let nmu2 = dot(mu, mu);
    let p = a / (1.0 + tl2);
    let q = b / (1.0 + nmu2);
    let sc = Scalings {
        a,
        b,
        p,
        q,
        in_domain: a > 0.0 && b > 0.0,
    };
    if !sc.in_domain {
        return Ok(AugLagEval {
            value: ExtReal::PosInfinity,
            gradient: None,
            components: None,
            scalings: sc,
        });
    }

    let fx = finite(problem.f(x), "f")?;
    let partials = problem.dg(x);
    let jac = problem.jac_h(x);
    let gl = grad_x_lagrangian_unchecked(problem, x, lambda, mu);
    let lam_g = match (lambda, &gmat) {
        (Some(lam), Some(g)) => Some(lam.matmul(g)),
        _ => None,
    };
    let eta_v = finite(
        dot(&gl, &gl) + lam_g.as_ref().map_or(0.0, |m| m.frobenius_norm().powi(2)),
        "eta",
    )?;

    // Inequality term via the spectrum of M = cG + pλ.
    let mut m_proj = None;
    let penalty_trace = match (&gmat, lambda) {
        (Some(g), Some(lam)) => {
            let m = g.scaled(c).add_scaled(p, lam);
            let me = eig_sym(&m)?;
            let s2 = psd_part_norm_sq(&me);
            let term = (s2 - p * p * tl2) / (2.0 * c * p);
            m_proj = Some((me, s2));
            finite(term, "penalty_trace")?
        }
        _ => 0.0,
    };
    let mu_h = dot(mu, &h);
    let eq_quadratic = if h.is_empty() {
        0.0
    } else {
        finite(c * nh2 / (2.0 * q), "eq_quadratic")?
    };

    let components = AugLagComponents {
        f: fx,
        penalty_trace,
        mu_h,
        eq_quadratic,
        eta: eta_v,
    };
    let value = finite(components.sum(), "value")?;

    let gradient = if want_gradient {
        let mut gx = problem.grad_f(x);
        let mut glam = lambda.map(|lam| SymMatrix::zeros(lam.dim()));
        let mut gmu = vec![0.0; mu.len()];

        if let (Some(lam), Some(geig), Some((me, s2))) = (lambda, &g_eig, &m_proj) {
            let s_plus = me.reassemble(|e| e.max(0.0));
            // ∂/∂p of the inequality term at fixed M-dependence through p.
            let dp_coef = s_plus.inner(lam) / (c * p) - s2 / (2.0 * c * p * p) - tl2 / (2.0 * c);
            let da_dx: Vec<f64> = if delta_g > 0.0 {
                let g_plus = geig.reassemble(|e| e.max(0.0));
                let scale = -kappa * delta_g.powf(kappa - 1.0) * 2.0;
                partials.iter().map(|gi| scale * g_plus.inner(gi)).collect()
            } else {
                vec![0.0; d]
            };
            for i in 0..d {
                let dp_dx = da_dx[i] / (1.0 + tl2);
                gx[i] += s_plus.inner(&partials[i]) / p + dp_coef * dp_dx;
            }
            let dp_dlam = lam.scaled(-2.0 * a / (1.0 + tl2).powi(2));
            let gl_lam = s_plus
                .add_scaled(-p, lam)
                .scaled(1.0 / c)
                .add_scaled(dp_coef, &dp_dlam);
            glam = Some(gl_lam);
        }

        if !h.is_empty() {
            let jt_mu = jac.tr_matvec(mu);
            let jt_h = jac.tr_matvec(&h);
            let q_coef = -c * nh2 / (2.0 * q * q);
            for i in 0..d {
                let dq_dx = -2.0 * jt_h[i] / (1.0 + nmu2);
                gx[i] += jt_mu[i] + (c / q) * jt_h[i] + q_coef * dq_dx;
            }
            for k in 0..mu.len() {
                let dq_dmu = -2.0 * b * mu[k] / (1.0 + nmu2).powi(2);
                gmu[k] += h[k] + q_coef * dq_dmu;
            }
        }

        // η = ‖∇ₓL‖² + trace(λ²G²)
        let hess = hessian_x_lagrangian_unchecked(problem, x, lambda, mu);
        let hg = hess.matvec(&gl);
        for i in 0..d {
            gx[i] += 2.0 * hg[i];
        }
        let jg = jac.matvec(&gl);
        for k in 0..mu.len() {
            gmu[k] += 2.0 * jg[k];
        }
        if let (Some(lam), Some(g), Some(glam)) = (lambda, &gmat, glam.as_mut()) {
            let mut acc = glam.clone();
            for (i, gi) in partials.iter().enumerate() {
                acc = acc.add_scaled(2.0 * gl[i], gi);
            }
            let lam2 = SymMatrix::from_upper(lam.dim(), {
                let p = lam.matmul(lam);
                move |i, j| 0.5 * (p[(i, j)] + p[(j, i)])
            });
            let g2 = SymMatrix::from_upper(g.dim(), {
                let p = g.matmul(g);
                move |i, j| 0.5 * (p[(i, j)] + p[(j, i)])
            });
            let sx = g.anticommutator(&lam2);
            for i in 0..d {
                gx[i] += sx.inner(&partials[i]);
            }
            acc = acc.add(&lam.anticommutator(&g2));
            *glam = acc;
        }

        let grad = ExtendedPoint::new(gx, glam, gmu);
        if !grad.is_finite() {
            return Err(Error::NonFinite("augmented Lagrangian gradient".into()));
        }
        Some(grad)
    } else {
        None
    };

    Ok(AugLagEval {
        value: ExtReal::Finite(value),
        gradient,
        components: Some(components),
        scalings: sc,
    })
}

/// Flat-coordinate evaluation used by the solvers: value and coordinate gradient.
pub fn eval_auglag_coords(
    problem: &NlsdpProblem,
    z: &[f64],
    c: f64,
    want_gradient: bool,
) -> Result<(ExtReal, Option<Vec<f64>>)> {
    let xi = ExtendedPoint::from_coords(problem, z);
    let ev = eval_auglag(problem, &xi, c, want_gradient)?;
    Ok((ev.value, ev.gradient.map(|g| g.gradient_coords())))
}
