// Limited-memory quasi-Newton with Armijo backtracking over an objective
// that may return +∞ (treated as a rejected trial point).

use super::{SolverConfig, StepRecord, Termination};
use crate::error::Result;
use crate::ext::ExtReal;
use crate::symmat::{dot, norm};
use std::collections::VecDeque;

/// Values below this end the run as unbounded.
pub(crate) const UNBOUNDED_VALUE: f64 = -1e30;

pub(crate) trait Objective {
    /// Value and, when the value is finite and smooth there, the gradient.
    fn eval(&mut self, z: &[f64]) -> Result<(ExtReal, Option<Vec<f64>>)>;

    fn project(&self, _z: &mut [f64]) {}

    /// Optional jump to a nonsmooth face after an accepted step: returns the
    /// face point when it is at least as good as `value`.
    fn face(&mut self, _z: &[f64], _value: f64) -> Result<Option<(Vec<f64>, f64)>> {
        Ok(None)
    }
}

pub(crate) struct Outcome {
    pub z: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub steps: Vec<StepRecord>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn two_loop(g: &[f64], hist: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for p in hist.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = hist.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (p, a) in hist.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// `z0` must have a finite value with a gradient.
pub(crate) fn minimize(
    obj: &mut dyn Objective,
    z0: Vec<f64>,
    value0: f64,
    grad0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<Outcome> {
    let ls = &cfg.line_search;
    let mut z = z0;
    let mut f = value0;
    let mut g = grad0;
    let mut hist: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut steps = Vec::new();
    let mut iterations = 0;

    let finish = |z: Vec<f64>, value: f64, g: &[f64], iterations, termination, steps| Outcome {
        z,
        value,
        grad_norm: norm(g),
        iterations,
        termination,
        steps,
    };

    while iterations < cfg.max_iters {
        let gnorm = norm(&g);
        if gnorm <= cfg.grad_tol {
            return Ok(finish(z, f, &g, iterations, Termination::Converged, steps));
        }
        let first_scale = 1.0 / gnorm.max(1.0);
        let mut d = if hist.is_empty() {
            g.iter().map(|v| -v * first_scale).collect()
        } else {
            two_loop(&g, &hist)
        };
        if !(dot(&g, &d) < 0.0) || d.iter().any(|v| !v.is_finite()) {
            hist.clear();
            d = g.iter().map(|v| -v * first_scale).collect();
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=ls.max_backtracks {
            let mut trial: Vec<f64> = z.iter().zip(&d).map(|(zi, di)| zi + t * di).collect();
            obj.project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
            let slope = dot(&g, &step);
            if slope < 0.0 {
                let (v, gn) = obj.eval(&trial)?;
                if let ExtReal::Finite(v) = v {
                    let bound = f + ls.sufficient_decrease * slope;
                    if v <= bound && v < f {
                        accepted = Some((trial, v, gn, ls.sufficient_decrease * slope));
                        break;
                    }
                }
            }
            t *= ls.backtrack;
        }
        iterations += 1;

        let Some((z_new, f_new, g_new, margin)) = accepted else {
            if !hist.is_empty() {
                // Retry once along steepest descent before giving up.
                hist.clear();
                continue;
            }
            return Ok(finish(z, f, &g, iterations, Termination::Stalled, steps));
        };
        steps.push(StepRecord {
            before: f,
            after: f_new,
            armijo_margin: margin,
        });
        if f_new < UNBOUNDED_VALUE {
            let gn = g_new.unwrap_or_default();
            return Ok(finish(z_new, f_new, &gn, iterations, Termination::Unbounded, steps));
        }
        let Some(g_new) = g_new else {
            return Ok(Outcome {
                z: z_new,
                value: f_new,
                grad_norm: f64::NAN,
                iterations,
                termination: Termination::SingularFace,
                steps,
            });
        };
        if let Some((zf, vf)) = obj.face(&z_new, f_new)? {
            if vf < f_new {
                steps.push(StepRecord {
                    before: f_new,
                    after: vf,
                    armijo_margin: 0.0,
                });
            }
            return Ok(Outcome {
                z: zf,
                value: vf,
                grad_norm: f64::NAN,
                iterations,
                termination: Termination::SingularFace,
                steps,
            });
        }

        let s: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        z = z_new;
        f = f_new;
        g = g_new;
    }
    let termination = if norm(&g) <= cfg.grad_tol {
        Termination::Converged
    } else {
        Termination::IterationLimit
    };
    Ok(finish(z, f, &g, iterations, termination, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;
    impl Objective for Rosenbrock {
        fn eval(&mut self, z: &[f64]) -> Result<(ExtReal, Option<Vec<f64>>)> {
            let (x, y) = (z[0], z[1]);
            let v = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
            let g = vec![-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)];
            Ok((ExtReal::Finite(v), Some(g)))
        }
    }

    #[test]
    fn rosenbrock() {
        let mut obj = Rosenbrock;
        let (v, g) = obj.eval(&[-1.2, 1.0]).unwrap();
        let out = minimize(&mut obj, vec![-1.2, 1.0], v.finite().unwrap(), g.unwrap(), &SolverConfig::default())
            .unwrap();
        assert_eq!(out.termination, Termination::Converged);
        assert!((out.z[0] - 1.0).abs() < 1e-6 && (out.z[1] - 1.0).abs() < 1e-6);
        for s in &out.steps {
            assert!(s.after <= s.before + s.armijo_margin && s.after < s.before);
        }
    }

    // f = x² on x > 0.5, +∞ elsewhere: the iterates must stay in the domain.
    struct Walled;
    impl Objective for Walled {
        fn eval(&mut self, z: &[f64]) -> Result<(ExtReal, Option<Vec<f64>>)> {
            if z[0] <= 0.5 {
                return Ok((ExtReal::PosInfinity, None));
            }
            Ok((ExtReal::Finite(z[0] * z[0]), Some(vec![2.0 * z[0]])))
        }
    }

    #[test]
    fn infinite_values_backtrack() {
        let mut obj = Walled;
        let out = minimize(&mut obj, vec![3.0], 9.0, vec![6.0], &SolverConfig::default()).unwrap();
        assert!(out.z[0] > 0.5);
        assert!(out.value < 9.0);
        assert!(matches!(out.termination, Termination::Stalled | Termination::IterationLimit));
    }
}
