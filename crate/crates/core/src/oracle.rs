//! Brute-force grid minimization for cross-checking the solvers at small
//! dimension.

use crate::auglag::{eval_auglag_coords, ExtendedPoint};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::penalty::eval_penalty;
use crate::problems::{NlsdpProblem, SingularPenaltyProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Largest number of grid points evaluated in one call.
pub const GRID_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMin {
    pub point: Vec<f64>,
    pub value: ExtReal,
    /// Grid index of the minimizer along each axis.
    pub index: Vec<usize>,
    /// Grid spacing along each axis (zero for single-point axes).
    pub spacing: Vec<f64>,
}

fn node(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if n == 1 {
        lo
    } else if k == n - 1 {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (n - 1) as f64
    }
}

fn sanitize(v: ExtReal) -> ExtReal {
    match v {
        ExtReal::Finite(x) if x.is_nan() => ExtReal::PosInfinity,
        other => other,
    }
}

/// Exhaustive minimization over the tensor grid with `resolution[i]` points
/// (endpoints included) on `bounds[i]`. Ties go to the lexicographically
/// smallest grid index, so the result does not depend on scheduling.
pub fn grid_min_axes<F>(evaluator: F, bounds: &[(f64, f64)], resolution: &[usize]) -> Result<GridMin>
where
    F: Fn(&[f64]) -> ExtReal + Sync,
{
    if bounds.len() != resolution.len() {
        return Err(Error::DimensionMismatch {
            context: "grid resolution",
            expected: bounds.len(),
            found: resolution.len(),
        });
    }
    if bounds.is_empty() {
        return Err(Error::InvalidParameter("grid needs at least one axis".into()));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidParameter("grid bounds must be finite with lo <= hi".into()));
    }
    if resolution.contains(&0) {
        return Err(Error::InvalidParameter("resolution must be >= 1 on every axis".into()));
    }
    let total = resolution.iter().fold(1u128, |acc, &n| acc.saturating_mul(n as u128));
    if total > GRID_BUDGET {
        return Err(Error::GridBudget {
            requested: total,
            budget: GRID_BUDGET,
        });
    }
    let dim = bounds.len();
    let unravel = |mut lin: usize| {
        let mut idx = vec![0; dim];
        for a in (0..dim).rev() {
            idx[a] = lin % resolution[a];
            lin /= resolution[a];
        }
        idx
    };
    let point_of = |idx: &[usize]| -> Vec<f64> {
        (0..dim)
            .map(|a| node(bounds[a].0, bounds[a].1, resolution[a], idx[a]))
            .collect()
    };
    // Row-major linear order equals lexicographic order of the grid index.
    let better = |a: (ExtReal, usize), b: (ExtReal, usize)| match a.0.total_cmp(&b.0) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    };
    let (value, lin) = (0..total as usize)
        .into_par_iter()
        .map(|lin| (sanitize(evaluator(&point_of(&unravel(lin)))), lin))
        .reduce(|| (ExtReal::PosInfinity, usize::MAX), better);
    let index = unravel(if lin == usize::MAX { 0 } else { lin });
    Ok(GridMin {
        point: point_of(&index),
        value,
        spacing: (0..dim)
            .map(|a| {
                if resolution[a] > 1 {
                    (bounds[a].1 - bounds[a].0) / (resolution[a] - 1) as f64
                } else {
                    0.0
                }
            })
            .collect(),
        index,
    })
}

/// [`grid_min_axes`] with the same resolution on every axis.
pub fn grid_min<F>(evaluator: F, bounds: &[(f64, f64)], resolution: usize) -> Result<GridMin>
where
    F: Fn(&[f64]) -> ExtReal + Sync,
{
    grid_min_axes(evaluator, bounds, &vec![resolution; bounds.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub point: Vec<f64>,
    pub value: ExtReal,
    /// Best value after each completed round.
    pub history: Vec<ExtReal>,
    /// Grid spacing of the last completed round.
    pub spacing: Vec<f64>,
    /// A round's box held no finite value; the incumbent was returned unchanged.
    pub vacuous: bool,
}

/// Iterated local grid search: each round grids `incumbent ± half_width` with
/// `points` (odd, so the incumbent is a node) per axis. A strictly better node
/// becomes the new incumbent at the same width; otherwise the half-widths
/// shrink by `shrink`.
pub fn refine_min<F>(
    evaluator: F,
    seed: &[f64],
    half_width: &[f64],
    shrink: f64,
    rounds: usize,
    points: usize,
) -> Result<Refined>
where
    F: Fn(&[f64]) -> ExtReal + Sync,
{
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be >= 1".into()));
    }
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidParameter(format!("shrink must lie in (0, 1), got {shrink}")));
    }
    if points < 3 || points.is_multiple_of(2) {
        return Err(Error::InvalidParameter("points per axis must be odd and >= 3".into()));
    }
    if half_width.len() != seed.len() {
        return Err(Error::DimensionMismatch {
            context: "refinement half-widths",
            expected: seed.len(),
            found: half_width.len(),
        });
    }
    let mut best = seed.to_vec();
    let mut best_value = sanitize(evaluator(seed));
    let mut half = half_width.to_vec();
    let mut history = Vec::with_capacity(rounds);
    let mut spacing = vec![0.0; seed.len()];
    let mut vacuous = false;
    for _ in 0..rounds {
        let bounds: Vec<(f64, f64)> = best.iter().zip(&half).map(|(c, h)| (c - h, c + h)).collect();
        let g = grid_min(&evaluator, &bounds, points)?;
        if !g.value.is_finite() {
            vacuous = true;
            break;
        }
        spacing = g.spacing;
        if g.value.lt(&best_value) {
            best = g.point;
            best_value = g.value;
        } else {
            half.iter_mut().for_each(|h| *h *= shrink);
        }
        history.push(best_value);
    }
    Ok(Refined {
        point: best,
        value: best_value,
        history,
        spacing,
        vacuous,
    })
}

/// Grid dimensions beyond which [`cross_check_auglag`] and
/// [`cross_check_penalty`] decline to run.
pub const CROSS_CHECK_MAX_DIM: usize = 4;
/// Points per cross-check grid.
pub const CROSS_CHECK_POINTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub c: f64,
    pub dims: usize,
    pub bounds: Vec<(f64, f64)>,
    pub resolution: usize,
    pub grid_point: Option<Vec<f64>>,
    pub grid_value: Option<ExtReal>,
    pub refined_point: Option<Vec<f64>>,
    pub refined_value: Option<ExtReal>,
    pub solver_value: f64,
    /// `solver_value ≤ grid_value + 1e-9`.
    pub solver_le_grid: Option<bool>,
    /// Largest per-axis distance from the solver point to the grid argmin, in cells.
    pub distance_cells: Option<f64>,
    pub note: Option<String>,
}

impl OracleCheck {
    /// The grid did not beat the solver. A skipped check does not count against it.
    pub fn passed(&self) -> bool {
        self.solver_le_grid != Some(false)
    }
}

fn cross_resolution(dims: usize) -> usize {
    let mut r = 3usize;
    while r + 2 <= 401 && ((r + 2) as u128).pow(dims as u32) <= CROSS_CHECK_POINTS {
        r += 2;
    }
    r
}

fn cross_check<F>(evaluator: F, center: &[f64], bounds: Vec<(f64, f64)>, c: f64, solver_value: f64) -> Result<OracleCheck>
where
    F: Fn(&[f64]) -> ExtReal + Sync,
{
    let dims = center.len();
    let mut out = OracleCheck {
        c,
        dims,
        bounds,
        resolution: 0,
        grid_point: None,
        grid_value: None,
        refined_point: None,
        refined_value: None,
        solver_value,
        solver_le_grid: None,
        distance_cells: None,
        note: None,
    };
    if dims > CROSS_CHECK_MAX_DIM {
        out.note = Some(format!("skipped: {dims} grid dimensions exceed {CROSS_CHECK_MAX_DIM}"));
        return Ok(out);
    }
    out.resolution = cross_resolution(dims);
    let g = grid_min(&evaluator, &out.bounds, out.resolution)?;
    let refined = refine_min(&evaluator, &g.point, &g.spacing, 0.5, 20, 5)?;
    out.distance_cells = Some(
        center
            .iter()
            .zip(&g.point)
            .zip(&g.spacing)
            .map(|((a, b), h)| if *h > 0.0 { (a - b).abs() / h } else { 0.0 })
            .fold(0.0, f64::max),
    );
    out.solver_le_grid = Some(match g.value {
        ExtReal::Finite(v) => solver_value <= v + 1e-9,
        ExtReal::PosInfinity => true,
    });
    out.grid_point = Some(g.point);
    out.grid_value = Some(g.value);
    out.refined_point = Some(refined.point);
    out.refined_value = Some(refined.value);
    Ok(out)
}

/// Grid minimum of `𝓛(·, c)` over `point − 1 … point + 1.03` per coordinate.
/// The box is off-centre so the solver point is not itself a grid node.
pub fn cross_check_auglag(problem: &NlsdpProblem, point: &ExtendedPoint, c: f64) -> Result<OracleCheck> {
    let center = point.to_coords();
    let ExtReal::Finite(solver_value) = eval_auglag_coords(problem, &center, c, false)?.0 else {
        return Err(Error::StartOutsideDomain);
    };
    let bounds = center.iter().map(|v| (v - 1.0, v + 1.03)).collect();
    let eval = |z: &[f64]| eval_auglag_coords(problem, z, c, false).map_or(ExtReal::PosInfinity, |r| r.0);
    cross_check(eval, &center, bounds, c, solver_value)
}

/// Grid minimum of `F(·, ·, c)` over `x ± 2` and `p ∈ [0, 1]` (the `p = 0`
/// face included).
pub fn cross_check_penalty(problem: &SingularPenaltyProblem, x: &[f64], p: f64, c: f64) -> Result<OracleCheck> {
    let ExtReal::Finite(solver_value) = eval_penalty(problem, x, p, c, false)?.value else {
        return Err(Error::StartOutsideDomain);
    };
    let mut center = x.to_vec();
    center.push(p);
    let mut bounds: Vec<(f64, f64)> = x.iter().map(|v| (v - 2.0, v + 2.0)).collect();
    bounds.push((0.0, 1.0_f64.max(p)));
    let d = x.len();
    let eval = |z: &[f64]| {
        if z[d] < 0.0 {
            return ExtReal::PosInfinity;
        }
        eval_penalty(problem, &z[..d], z[d], c, false).map_or(ExtReal::PosInfinity, |e| e.value)
    };
    cross_check(eval, &center, bounds, c, solver_value)
}
