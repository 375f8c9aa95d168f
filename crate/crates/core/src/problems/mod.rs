//! Problem models.
//!
//! Two shapes are supported:
//!
//! * [`NlsdpProblem`]: `min f(x)` subject to `G(x) ⪯ 0` (a symmetric `l × l`
//!   block, possibly absent) and `h(x) = 0` (possibly empty), with the
//!   scaling parameters `α > 0` and `κ > 1` of the exact augmented Lagrangian.
//! * [`SingularPenaltyProblem`]: `min f(x)` subject to `g(x) = 0` for a
//!   single-valued `g: ℝ^d → ℝ^m`, with the shift `w` and the shape
//!   functions `φ`, `ω` of the singular penalty.
//!
//! Built-in instances live in [`registry`].

mod builtin;
pub mod registry;
pub(crate) mod validate;

pub use builtin::{
    BoxQpSdp, Diag2Degenerate, EqLinear, EqQuadratic, FlatEq, NearestCorr2, ScalarLmi,
    UnconstrainedQuadratic,
};
pub use registry::{registry, registry_get, Params, Problem, ProblemKind, ProblemRegistryEntry, ProblemSpec};
pub use validate::{
    central_gradient, validate_derivatives, DerivativeCheck, DerivativeReport,
};

use crate::auglag::ExtendedPoint;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::symmat::{Matrix, SymMatrix};
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_KAPPA: f64 = 2.0;

/// Step used when second derivatives are replaced by finite differences of gradients.
pub const FD_HESSIAN_STEP: f64 = 1e-5;

/// Callbacks describing `f`, `G` and `h` together with their derivatives.
///
/// Second derivatives are optional. When a model returns `None` the
/// Hessian of the Lagrangian falls back to central differences of its
/// gradient. Callbacks must be reentrant.
pub trait NlsdpModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `l`; zero means no matrix constraint.
    fn block_dim(&self) -> usize {
        0
    }

    /// `s`; zero means no equality constraints.
    fn eq_count(&self) -> usize {
        0
    }

    fn objective(&self, x: &[f64]) -> f64;

    fn objective_grad(&self, x: &[f64]) -> Vec<f64>;

    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }

    /// `G(x)`; only called when `block_dim() > 0`.
    fn constraint(&self, _x: &[f64]) -> Option<SymMatrix> {
        None
    }

    /// `D_{x_i} G(x)` for `i = 1..d`.
    fn constraint_partials(&self, _x: &[f64]) -> Vec<SymMatrix> {
        Vec::new()
    }

    /// `D²_{x_i x_j} G(x)`, indexed `[i][j]`.
    fn constraint_second(&self, _x: &[f64]) -> Option<Vec<Vec<SymMatrix>>> {
        None
    }

    fn equality(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// `∇h(x)` as an `s × d` matrix (row `k` is `∇h_k`).
    fn equality_jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::zeros(0, self.dim())
    }

    /// Hessians of `h_1, …, h_s`.
    fn equality_hessians(&self, _x: &[f64]) -> Option<Vec<Matrix>> {
        None
    }
}

/// Nonlinear semidefinite program together with the merit-function parameters.
#[derive(Clone)]
pub struct NlsdpProblem {
    name: String,
    model: Arc<dyn NlsdpModel>,
    alpha: f64,
    kappa: f64,
    pub f_star: Option<f64>,
    pub known_solutions: Vec<ExtendedPoint>,
    pub default_start: ExtendedPoint,
}

impl fmt::Debug for NlsdpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlsdpProblem")
            .field("name", &self.name)
            .field("d", &self.dim())
            .field("l", &self.block_dim())
            .field("s", &self.eq_count())
            .field("alpha", &self.alpha)
            .field("kappa", &self.kappa)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl NlsdpProblem {
    /// Wraps a model with default `α = 1`, `κ = 2` and a zero start.
    pub fn new(name: impl Into<String>, model: Arc<dyn NlsdpModel>) -> Self {
        let default_start = ExtendedPoint::zeros(model.dim(), model.block_dim(), model.eq_count());
        NlsdpProblem {
            name: name.into(),
            model,
            alpha: DEFAULT_ALPHA,
            kappa: DEFAULT_KAPPA,
            f_star: None,
            known_solutions: Vec::new(),
            default_start,
        }
    }

    pub fn with_params(mut self, alpha: f64, kappa: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be > 1, got {kappa}")));
        }
        self.alpha = alpha;
        self.kappa = kappa;
        Ok(self)
    }

    pub fn with_solution(mut self, f_star: f64, solution: ExtendedPoint) -> Self {
        self.f_star = Some(f_star);
        self.known_solutions.push(solution);
        self
    }

    pub fn with_start(mut self, start: ExtendedPoint) -> Self {
        self.default_start = start;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &dyn NlsdpModel {
        self.model.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn block_dim(&self) -> usize {
        self.model.block_dim()
    }

    pub fn eq_count(&self) -> usize {
        self.model.eq_count()
    }

    /// Length of the flattened extended point `(x, λ, μ)`.
    pub fn extended_len(&self) -> usize {
        self.dim() + SymMatrix::coord_len(self.block_dim()) + self.eq_count()
    }

    pub fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "primal point",
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.model.objective(x)
    }

    pub fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        self.model.objective_grad(x)
    }

    /// `G(x)`, or `None` when `l = 0`.
    pub fn g(&self, x: &[f64]) -> Option<SymMatrix> {
        if self.block_dim() == 0 {
            None
        } else {
            self.model.constraint(x)
        }
    }

    pub fn dg(&self, x: &[f64]) -> Vec<SymMatrix> {
        if self.block_dim() == 0 {
            Vec::new()
        } else {
            self.model.constraint_partials(x)
        }
    }

    pub fn h(&self, x: &[f64]) -> Vec<f64> {
        if self.eq_count() == 0 {
            Vec::new()
        } else {
            self.model.equality(x)
        }
    }

    pub fn jac_h(&self, x: &[f64]) -> Matrix {
        if self.eq_count() == 0 {
            Matrix::zeros(0, self.dim())
        } else {
            self.model.equality_jacobian(x)
        }
    }
}

/// Scalar shape function `[0, ∞) → [0, ∞]` used for `φ` and `ω`.
#[derive(Clone)]
pub struct ScalarFn {
    name: String,
    value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.name)
    }
}

impl ScalarFn {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        ScalarFn {
            name: name.into(),
            value: Arc::new(value),
            deriv,
        }
    }

    pub fn identity() -> Self {
        Self::new("id", |t| t, Some(Arc::new(|_| 1.0)))
    }

    pub fn square() -> Self {
        Self::new("square", |t| t * t, Some(Arc::new(|t| 2.0 * t)))
    }

    /// `a·t + t²`.
    pub fn linear_square(a: f64) -> Self {
        Self::new(
            format!("linear-square({a})"),
            move |t| a * t + t * t,
            Some(Arc::new(move |t| a + 2.0 * t)),
        )
    }

    /// Parses `"id"`, `"square"` or `"linear-square:<a>"`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "id" => Ok(Self::identity()),
            "square" => Ok(Self::square()),
            other => {
                if let Some(a) = other.strip_prefix("linear-square:") {
                    let a: f64 = a.parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad linear-square coefficient `{a}`"))
                    })?;
                    if a <= 0.0 {
                        return Err(Error::InvalidParameter(
                            "linear-square coefficient must be positive".into(),
                        ));
                    }
                    Ok(Self::linear_square(a))
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown shape function `{other}` (expected id, square, linear-square:<a>)"
                    )))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn derivative(&self, t: f64) -> Option<f64> {
        self.deriv.as_ref().map(|d| d(t))
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    /// Spot check of `ψ(0) = 0`, `ψ(t) > 0` for `t > 0` and monotonicity on a grid of `[0, t_max]`.
    pub fn check_shape(&self, t_max: f64, samples: usize) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shape function {} must vanish at 0",
                self.name
            )));
        }
        let mut prev = 0.0;
        for k in 1..=samples {
            let t = t_max * k as f64 / samples as f64;
            let v = self.eval(t);
            if !(v > 0.0) || v < prev {
                return Err(Error::InvalidParameter(format!(
                    "shape function {} must be positive and nondecreasing on (0, {t_max}] (fails at t = {t})",
                    self.name
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Callbacks for the single-valued penalty form `min f(x)` s.t. `g(x) = 0`.
pub trait PenaltyModel: Send + Sync {
    fn dim(&self) -> usize;
    fn constraint_dim(&self) -> usize;
    /// `f(x)`, possibly `+∞` outside its domain.
    fn objective(&self, x: &[f64]) -> ExtReal;
    fn objective_grad(&self, x: &[f64]) -> Option<Vec<f64>>;
    fn constraint(&self, x: &[f64]) -> Vec<f64>;
    /// `m × d` Jacobian of `g`.
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix;
}

#[derive(Clone)]
pub struct SingularPenaltyProblem {
    name: String,
    model: Arc<dyn PenaltyModel>,
    pub w: Vec<f64>,
    pub phi: ScalarFn,
    pub omega: ScalarFn,
    pub f_star: Option<f64>,
    pub known_minimizer: Option<Vec<f64>>,
    pub default_start: (Vec<f64>, f64),
}

impl fmt::Debug for SingularPenaltyProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SingularPenaltyProblem")
            .field("name", &self.name)
            .field("d", &self.dim())
            .field("m", &self.constraint_dim())
            .field("w", &self.w)
            .field("phi", &self.phi)
            .field("omega", &self.omega)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl SingularPenaltyProblem {
    /// Builds the problem after spot-checking `φ` and `ω` on `[0, 10]`.
    pub fn new(
        name: impl Into<String>,
        model: Arc<dyn PenaltyModel>,
        w: Vec<f64>,
        phi: ScalarFn,
        omega: ScalarFn,
    ) -> Result<Self> {
        if w.len() != model.constraint_dim() {
            return Err(Error::DimensionMismatch {
                context: "penalty shift w",
                expected: model.constraint_dim(),
                found: w.len(),
            });
        }
        phi.check_shape(10.0, 200)?;
        omega.check_shape(10.0, 200)?;
        let d = model.dim();
        Ok(SingularPenaltyProblem {
            name: name.into(),
            model,
            w,
            phi,
            omega,
            f_star: None,
            known_minimizer: None,
            default_start: (vec![0.0; d], 1.0),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &dyn PenaltyModel {
        self.model.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn constraint_dim(&self) -> usize {
        self.model.constraint_dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_function_checks() {
        assert!(ScalarFn::identity().check_shape(1.0, 10).is_ok());
        let bad = ScalarFn::new("shifted", |t| t + 1.0, None);
        assert!(bad.check_shape(1.0, 10).is_err());
        let flat = ScalarFn::new("flat", |t| if t > 0.5 { 0.0 } else { t }, None);
        assert!(flat.check_shape(1.0, 10).is_err());
        assert_eq!(ScalarFn::parse("linear-square:2").unwrap().eval(1.0), 3.0);
        assert!(ScalarFn::parse("cube").is_err());
    }

    #[test]
    fn alpha_kappa_validation() {
        let p = NlsdpProblem::new("s", Arc::new(ScalarLmi));
        assert!(p.clone().with_params(1.0, 1.0).is_err());
        assert!(p.clone().with_params(0.0, 2.0).is_err());
        let q = p.with_params(2.0, 1.5).unwrap();
        assert_eq!((q.alpha(), q.kappa()), (2.0, 1.5));
    }
}
