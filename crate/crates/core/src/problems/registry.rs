//! Named built-in problems and the JSON problem-parameter schema.
//!
//! A problem file looks like
//!
//! ```json
//! {"name": "box-qp-sdp", "params": {"x0": [1.0, -0.5, 0.7]}, "alpha": 1.0, "kappa": 2.0}
//! ```
//!
//! `params`, `alpha` and `kappa` are optional. `alpha`/`kappa` only apply to
//! semidefinite problems.

use super::builtin::*;
use super::{NlsdpProblem, ScalarFn, SingularPenaltyProblem, DEFAULT_ALPHA, DEFAULT_KAPPA};
use crate::auglag::ExtendedPoint;
use crate::error::{Error, Result};
use crate::symmat::SymMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;
use std::sync::Arc;

pub type Params = serde_json::Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Nlsdp,
    Penalty,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Nlsdp(NlsdpProblem),
    Penalty(SingularPenaltyProblem),
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Nlsdp(_) => ProblemKind::Nlsdp,
            Problem::Penalty(_) => ProblemKind::Penalty,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Problem::Nlsdp(p) => p.name(),
            Problem::Penalty(p) => p.name(),
        }
    }

    pub fn into_nlsdp(self) -> Result<NlsdpProblem> {
        match self {
            Problem::Nlsdp(p) => Ok(p),
            Problem::Penalty(p) => Err(Error::WrongProblemKind(p.name().to_string())),
        }
    }

    pub fn into_penalty(self) -> Result<SingularPenaltyProblem> {
        match self {
            Problem::Penalty(p) => Ok(p),
            Problem::Nlsdp(p) => Err(Error::WrongProblemKind(p.name().to_string())),
        }
    }
}

pub struct ProblemRegistryEntry {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub documentation: &'static str,
    /// Accepted keys of `params` besides `alpha`/`kappa`.
    pub param_keys: &'static [&'static str],
    pub builder: fn(&Params) -> Result<Problem>,
}

static REGISTRY: &[ProblemRegistryEntry] = &[
    ProblemRegistryEntry {
        name: "scalar-lmi",
        kind: ProblemKind::Nlsdp,
        documentation: "min x s.t. -x <= 0 (d = l = 1). f* = 0, KKT point (x, lambda) = (0, 1).",
        param_keys: &[],
        builder: build_scalar_lmi,
    },
    ProblemRegistryEntry {
        name: "eq-quadratic",
        kind: ProblemKind::Nlsdp,
        documentation: "min x^2 s.t. x - 1 = 0 (l = 0, s = 1). f* = 1, KKT point (x, mu) = (1, -2).",
        param_keys: &[],
        builder: build_eq_quadratic,
    },
    ProblemRegistryEntry {
        name: "diag2-degenerate",
        kind: ProblemKind::Nlsdp,
        documentation: "min x1 + x2 s.t. -diag(x1, x2) <= 0. Optimum (0, 0) is degenerate.",
        param_keys: &[],
        builder: build_diag2,
    },
    ProblemRegistryEntry {
        name: "box-qp-sdp",
        kind: ProblemKind::Nlsdp,
        documentation: "min |x - x0|^2 s.t. -diag(x) <= 0. Param x0 (default [1.0, -0.5, 0.7]); solution max(x0, 0).",
        param_keys: &["x0"],
        builder: build_box_qp,
    },
    ProblemRegistryEntry {
        name: "nearest-corr-2",
        kind: ProblemKind::Nlsdp,
        documentation: "min |X - C|_F^2 over X = [[x1, x2], [x2, x3]] >= 0 with x1 = x3 = 1. Param C (default [[1, 1.5], [1.5, 1]]).",
        param_keys: &["C"],
        builder: build_nearest_corr,
    },
    ProblemRegistryEntry {
        name: "flat-eq",
        kind: ProblemKind::Nlsdp,
        documentation: "min 0 s.t. x = 0 (flat objective, l = 0, s = 1). f* = 0, KKT point (0, mu = 0).",
        param_keys: &[],
        builder: build_flat_eq,
    },
    ProblemRegistryEntry {
        name: "unconstrained-quadratic",
        kind: ProblemKind::Nlsdp,
        documentation: "min |x - center|^2 with no constraints (l = s = 0). Param center (default [1.0, -2.0]).",
        param_keys: &["center"],
        builder: build_unconstrained,
    },
    ProblemRegistryEntry {
        name: "eq-linear",
        kind: ProblemKind::Penalty,
        documentation: "Singular-penalty form: min x s.t. x = 0. Params w (default 1), phi and omega (id | square | linear-square:<a>, default id).",
        param_keys: &["w", "phi", "omega"],
        builder: build_eq_linear,
    },
];

pub fn registry() -> &'static [ProblemRegistryEntry] {
    REGISTRY
}

pub fn registry_names() -> Vec<String> {
    REGISTRY.iter().map(|e| e.name.to_string()).collect()
}

/// Looks up and builds a registered problem.
pub fn registry_get(name: &str, params: &Params) -> Result<Problem> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownProblem {
            name: name.to_string(),
            available: registry_names(),
        })?;
    for key in params.keys() {
        let shared = entry.kind == ProblemKind::Nlsdp && (key == "alpha" || key == "kappa");
        if !shared && !entry.param_keys.contains(&key.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "problem `{name}` does not accept parameter `{key}`"
            )));
        }
    }
    (entry.builder)(params)
}

/// Contents of a JSON problem-parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl ProblemSpec {
    pub fn named(name: impl Into<String>) -> Self {
        ProblemSpec {
            name: name.into(),
            params: Params::new(),
            alpha: None,
            kappa: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Problem> {
        let mut params = self.params.clone();
        if let Some(a) = self.alpha {
            params.insert("alpha".into(), Value::from(a));
        }
        if let Some(k) = self.kappa {
            params.insert("kappa".into(), Value::from(k));
        }
        registry_get(&self.name, &params)
    }
}

fn param_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::InvalidParameter(format!("`{key}` must be a number"))),
    }
}

fn param_vec(params: &Params, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    match params.get(key) {
        None => Ok(default.to_vec()),
        Some(Value::Number(n)) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        Some(v) => {
            let out: Vec<f64> = serde_json::from_value(v.clone()).map_err(|_| {
                Error::InvalidParameter(format!("`{key}` must be an array of numbers"))
            })?;
            if out.is_empty() || out.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "`{key}` must be a non-empty array of finite numbers"
                )));
            }
            Ok(out)
        }
    }
}

fn param_str<'a>(params: &'a Params, key: &str, default: &'a str) -> Result<&'a str> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_str()
            .ok_or_else(|| Error::InvalidParameter(format!("`{key}` must be a string"))),
    }
}

fn finish(problem: NlsdpProblem, params: &Params) -> Result<Problem> {
    let alpha = param_f64(params, "alpha", DEFAULT_ALPHA)?;
    let kappa = param_f64(params, "kappa", DEFAULT_KAPPA)?;
    Ok(Problem::Nlsdp(problem.with_params(alpha, kappa)?))
}

fn build_scalar_lmi(params: &Params) -> Result<Problem> {
    let p = NlsdpProblem::new("scalar-lmi", Arc::new(ScalarLmi))
        .with_solution(
            0.0,
            ExtendedPoint::new(vec![0.0], Some(SymMatrix::diag(&[1.0])), vec![]),
        )
        .with_start(ExtendedPoint::new(
            vec![0.5],
            Some(SymMatrix::diag(&[0.5])),
            vec![],
        ));
    finish(p, params)
}

fn build_eq_quadratic(params: &Params) -> Result<Problem> {
    let p = NlsdpProblem::new("eq-quadratic", Arc::new(EqQuadratic))
        .with_solution(1.0, ExtendedPoint::new(vec![1.0], None, vec![-2.0]));
    finish(p, params)
}

fn build_diag2(params: &Params) -> Result<Problem> {
    let p = NlsdpProblem::new("diag2-degenerate", Arc::new(Diag2Degenerate))
        .with_solution(
            0.0,
            ExtendedPoint::new(vec![0.0, 0.0], Some(SymMatrix::identity(2)), vec![]),
        )
        .with_start(ExtendedPoint::new(
            vec![0.5, 0.5],
            Some(SymMatrix::identity(2).scaled(0.5)),
            vec![],
        ));
    finish(p, params)
}

fn build_box_qp(params: &Params) -> Result<Problem> {
    let model = BoxQpSdp {
        x0: param_vec(params, "x0", &[1.0, -0.5, 0.7])?,
    };
    let solution = ExtendedPoint::new(model.solution(), Some(model.multiplier()), vec![]);
    let f_star = model.optimal_value();
    let p = NlsdpProblem::new("box-qp-sdp", Arc::new(model)).with_solution(f_star, solution);
    finish(p, params)
}

fn build_nearest_corr(params: &Params) -> Result<Problem> {
    let c = match params.get("C") {
        None => [[1.0, 1.5], [1.5, 1.0]],
        Some(v) => {
            let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone())
                .map_err(|_| Error::InvalidParameter("`C` must be a 2x2 array".into()))?;
            let sym = SymMatrix::from_rows(&rows)
                .map_err(|e| Error::InvalidParameter(format!("`C`: {e}")))?;
            if sym.dim() != 2 || !sym.is_finite() {
                return Err(Error::InvalidParameter("`C` must be a finite 2x2 symmetric array".into()));
            }
            [[sym.get(0, 0), sym.get(0, 1)], [sym.get(1, 0), sym.get(1, 1)]]
        }
    };
    let model = NearestCorr2 { c };
    let (x, lambda, mu, f) = model.solution();
    let p = NlsdpProblem::new("nearest-corr-2", Arc::new(model))
        .with_solution(f, ExtendedPoint::new(x, Some(lambda), mu))
        .with_start(ExtendedPoint::new(
            vec![1.0, 0.0, 1.0],
            Some(SymMatrix::zeros(2)),
            vec![0.0, 0.0],
        ));
    finish(p, params)
}

fn build_flat_eq(params: &Params) -> Result<Problem> {
    let p = NlsdpProblem::new("flat-eq", Arc::new(FlatEq))
        .with_solution(0.0, ExtendedPoint::new(vec![0.0], None, vec![0.0]))
        .with_start(ExtendedPoint::new(vec![0.5], None, vec![0.0]));
    finish(p, params)
}

fn build_unconstrained(params: &Params) -> Result<Problem> {
    let center = param_vec(params, "center", &[1.0, -2.0])?;
    let solution = ExtendedPoint::new(center.clone(), None, vec![]);
    let p = NlsdpProblem::new("unconstrained-quadratic", Arc::new(UnconstrainedQuadratic { center }))
        .with_solution(0.0, solution);
    finish(p, params)
}

fn build_eq_linear(params: &Params) -> Result<Problem> {
    let w = param_vec(params, "w", &[1.0])?;
    let phi = ScalarFn::parse(param_str(params, "phi", "id")?)?;
    let omega = ScalarFn::parse(param_str(params, "omega", "id")?)?;
    let mut p = SingularPenaltyProblem::new("eq-linear", Arc::new(EqLinear), w, phi, omega)?;
    p.f_star = Some(0.0);
    p.known_minimizer = Some(vec![0.0]);
    p.default_start = (vec![1.0], 0.8);
    Ok(Problem::Penalty(p))
}
