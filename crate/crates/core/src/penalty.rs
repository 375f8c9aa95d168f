//! Singular penalty function for `min f(x)` s.t. `g(x) = 0`:
//!
//! ```text
//! F(x, p, c) = f(x) + (c/p)·φ(‖g(x) − p·w‖²) + c·ω(p)    p > 0
//!            = f(x)                                       p = 0, g(x) = 0
//!            = +∞                                         p = 0, g(x) ≠ 0
//! ```
//!
//! The `p = 0` feasibility test uses `‖g(x)‖ ≤ FEAS_TOL`.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problems::{ScalarFn, SingularPenaltyProblem};
use crate::symmat::dot;
use serde::{Deserialize, Serialize};

pub const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyComponents {
    pub f: ExtReal,
    /// `(c/p)·φ(‖g − pw‖²)`; zero on the `p = 0` face.
    pub phi_term: ExtReal,
    /// `c·ω(p)`.
    pub omega_term: ExtReal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEval {
    pub value: ExtReal,
    /// `(∂F/∂x, ∂F/∂p)`; absent at `p = 0`, at `+∞`, or when a derivative is unavailable.
    pub gradient: Option<(Vec<f64>, f64)>,
    pub components: PenaltyComponents,
}

fn ext(v: f64) -> ExtReal {
    if v == f64::INFINITY {
        ExtReal::PosInfinity
    } else {
        ExtReal::Finite(v)
    }
}

pub fn eval_penalty(
    problem: &SingularPenaltyProblem,
    x: &[f64],
    p: f64,
    c: f64,
    want_gradient: bool,
) -> Result<PenaltyEval> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 0, got {p}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            context: "penalty primal point",
            expected: problem.dim(),
            found: x.len(),
        });
    }
    let model = problem.model();
    let fx = model.objective(x);
    if let ExtReal::Finite(v) = fx {
        if v.is_nan() {
            return Err(Error::NonFinite("penalty objective `f`".into()));
        }
    }
    let g = model.constraint(x);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("penalty constraint `g`".into()));
    }

    if p == 0.0 {
        let feasible = dot(&g, &g).sqrt() <= FEAS_TOL;
        let value = if feasible { fx } else { ExtReal::PosInfinity };
        return Ok(PenaltyEval {
            value,
            gradient: None,
            components: PenaltyComponents {
                f: fx,
                phi_term: if feasible { ExtReal::Finite(0.0) } else { ExtReal::PosInfinity },
                omega_term: ExtReal::Finite(0.0),
            },
        });
    }

    let r: Vec<f64> = g.iter().zip(&problem.w).map(|(gi, wi)| gi - p * wi).collect();
    let t = dot(&r, &r);
    let phi_t = problem.phi.eval(t);
    let omega_p = problem.omega.eval(p);
    let phi_term = ext(c / p * phi_t);
    let omega_term = ext(c * omega_p);
    let components = PenaltyComponents {
        f: fx,
        phi_term,
        omega_term,
    };
    let value = match (fx, phi_term, omega_term) {
        (ExtReal::Finite(a), ExtReal::Finite(b), ExtReal::Finite(cc)) => {
            let v = a + b + cc;
            if v.is_nan() {
                return Err(Error::NonFinite("penalty value".into()));
            }
            ext(v)
        }
        _ => ExtReal::PosInfinity,
    };

    let gradient = if want_gradient && value.is_finite() {
        penalty_gradient(problem, x, p, c, &r, t, &problem.phi, &problem.omega)
    } else {
        None
    };
    Ok(PenaltyEval {
        value,
        gradient,
        components,
    })
}

#[allow(clippy::too_many_arguments)]
fn penalty_gradient(
    problem: &SingularPenaltyProblem,
    x: &[f64],
    p: f64,
    c: f64,
    r: &[f64],
    t: f64,
    phi: &ScalarFn,
    omega: &ScalarFn,
) -> Option<(Vec<f64>, f64)> {
    let model = problem.model();
    let grad_f = model.objective_grad(x)?;
    let dphi = phi.derivative(t)?;
    let domega = omega.derivative(p)?;
    let jac = model.constraint_jacobian(x);
    let jt_r = jac.tr_matvec(r);
    let gx: Vec<f64> = grad_f
        .iter()
        .zip(&jt_r)
        .map(|(gf, jr)| gf + c / p * dphi * 2.0 * jr)
        .collect();
    let gp = -c / (p * p) * phi.eval(t) - c / p * dphi * 2.0 * dot(&problem.w, r) + c * domega;
    if gx.iter().all(|v| v.is_finite()) && gp.is_finite() {
        Some((gx, gp))
    } else {
        None
    }
}

/// Sampled linear-minorant screen for `φ` and `ω` on `[0, t₀]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub t0: f64,
    /// Smallest sampled `φ(t)/t`.
    pub phi0: f64,
    /// Smallest sampled `ω(t)/t`.
    pub omega0: f64,
    pub phi_has_linear_minorant: bool,
    pub omega_has_linear_minorant: bool,
    pub notes: Vec<String>,
}

/// Ratios below this are read as "no linear minorant near 0".
pub const MINORANT_TOL: f64 = 1e-8;

/// Estimates `φ₀ = inf φ(t)/t` and `ω₀ = inf ω(t)/t` over a uniform grid of
/// `samples` points on `(0, t₀]` plus a geometric grid `t₀·2⁻ᵏ`, `k ≤ 50`,
/// which exposes ratios that decay at the origin.
pub fn check_growth_conditions(problem: &SingularPenaltyProblem, t0: f64, samples: usize) -> GrowthReport {
    let mut ts: Vec<f64> = (1..=samples.max(1))
        .map(|k| t0 * k as f64 / samples.max(1) as f64)
        .collect();
    ts.extend((0..=50).map(|k| t0 * 0.5f64.powi(k)));
    let min_ratio = |f: &ScalarFn| {
        ts.iter()
            .filter(|&&t| t > 0.0)
            .map(|&t| f.eval(t) / t)
            .fold(f64::INFINITY, f64::min)
    };
    let phi0 = min_ratio(&problem.phi);
    let omega0 = min_ratio(&problem.omega);
    let mut notes = Vec::new();
    let phi_ok = phi0 > MINORANT_TOL;
    let omega_ok = omega0 > MINORANT_TOL;
    if !phi_ok {
        notes.push(format!("phi ({}): no linear minorant near 0", problem.phi.name()));
    }
    if !omega_ok {
        notes.push(format!("omega ({}): no linear minorant near 0", problem.omega.name()));
    }
    GrowthReport {
        t0,
        phi0,
        omega0,
        phi_has_linear_minorant: phi_ok,
        omega_has_linear_minorant: omega_ok,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitBehavior {
    ConvergesToLimit,
    DivergesToInfinity,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub p_sequence: Vec<f64>,
    pub values: Vec<ExtReal>,
    /// `F(x, 0, c)`.
    pub limit: ExtReal,
    pub behavior: LimitBehavior,
}

/// Tabulates `F(x, pₖ, c)` along a positive decreasing sequence and compares
/// the trend with `F(x, 0, c)`.
///
/// A finite limit is "approached" when the gaps `|F(x, pₖ, c) − F(x, 0, c)|`
/// never increase and the last gap is below the first; an infinite limit is
/// "approached" when the values never decrease and the last one exceeds the first.
pub fn limit_consistency(
    problem: &SingularPenaltyProblem,
    x: &[f64],
    c: f64,
    p_sequence: &[f64],
) -> Result<LimitReport> {
    if p_sequence.iter().any(|&p| !(p > 0.0)) || p_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "p_sequence must be positive and strictly decreasing".into(),
        ));
    }
    let limit = eval_penalty(problem, x, 0.0, c, false)?.value;
    let values = p_sequence
        .iter()
        .map(|&p| eval_penalty(problem, x, p, c, false).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let finite: Option<Vec<f64>> = values.iter().map(ExtReal::finite).collect();
    let behavior = match (limit, finite) {
        (_, None) => LimitBehavior::Inconclusive,
        (_, Some(v)) if v.len() < 2 => LimitBehavior::Inconclusive,
        (ExtReal::Finite(l), Some(v)) => {
            let gaps: Vec<f64> = v.iter().map(|f| (f - l).abs()).collect();
            let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-14 * (1.0 + w[0]));
            if monotone && gaps[gaps.len() - 1] < gaps[0] {
                LimitBehavior::ConvergesToLimit
            } else {
                LimitBehavior::Inconclusive
            }
        }
        (ExtReal::PosInfinity, Some(v)) => {
            let monotone = v.windows(2).all(|w| w[1] >= w[0]);
            if monotone && v[v.len() - 1] > v[0] {
                LimitBehavior::DivergesToInfinity
            } else {
                LimitBehavior::Inconclusive
            }
        }
    };
    Ok(LimitReport {
        p_sequence: p_sequence.to_vec(),
        values,
        limit,
        behavior,
    })
}
