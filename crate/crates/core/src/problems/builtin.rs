//! Built-in desk-scale instances.

use super::{NlsdpModel, PenaltyModel};
use crate::ext::ExtReal;
use crate::symmat::{Matrix, SymMatrix};

fn zero_second(d: usize, l: usize) -> Option<Vec<Vec<SymMatrix>>> {
    Some(vec![vec![SymMatrix::zeros(l); d]; d])
}

/// `min x` s.t. `−x ⪯ 0` (`d = l = 1`, `s = 0`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarLmi;

impl NlsdpModel for ScalarLmi {
    fn dim(&self) -> usize {
        1
    }
    fn block_dim(&self) -> usize {
        1
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn objective_grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(1, 1))
    }
    fn constraint(&self, x: &[f64]) -> Option<SymMatrix> {
        Some(SymMatrix::diag(&[-x[0]]))
    }
    fn constraint_partials(&self, _x: &[f64]) -> Vec<SymMatrix> {
        vec![SymMatrix::diag(&[-1.0])]
    }
    fn constraint_second(&self, _x: &[f64]) -> Option<Vec<Vec<SymMatrix>>> {
        zero_second(1, 1)
    }
}

/// `min x²` s.t. `x − 1 = 0` (`d = 1`, `l = 0`, `s = 1`).
#[derive(Debug, Clone, Copy, Default)]
pub struct EqQuadratic;

impl NlsdpModel for EqQuadratic {
    fn dim(&self) -> usize {
        1
    }
    fn eq_count(&self) -> usize {
        1
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] * x[0]
    }
    fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0]]
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::identity(1).scaled(2.0))
    }
    fn equality(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] - 1.0]
    }
    fn equality_jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
    fn equality_hessians(&self, _x: &[f64]) -> Option<Vec<Matrix>> {
        Some(vec![Matrix::zeros(1, 1)])
    }
}

/// `min x₁ + x₂` s.t. `−diag(x₁, x₂) ⪯ 0`. The optimum `(0, 0)` is degenerate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diag2Degenerate;

impl NlsdpModel for Diag2Degenerate {
    fn dim(&self) -> usize {
        2
    }
    fn block_dim(&self) -> usize {
        2
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] + x[1]
    }
    fn objective_grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![1.0, 1.0]
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(2, 2))
    }
    fn constraint(&self, x: &[f64]) -> Option<SymMatrix> {
        Some(SymMatrix::diag(&[-x[0], -x[1]]))
    }
    fn constraint_partials(&self, _x: &[f64]) -> Vec<SymMatrix> {
        vec![SymMatrix::diag(&[-1.0, 0.0]), SymMatrix::diag(&[0.0, -1.0])]
    }
    fn constraint_second(&self, _x: &[f64]) -> Option<Vec<Vec<SymMatrix>>> {
        zero_second(2, 2)
    }
}

/// `min ‖x − x₀‖²` s.t. `−diag(x) ⪯ 0`; the solution is `max(x₀, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpSdp {
    pub x0: Vec<f64>,
}

impl BoxQpSdp {
    pub fn solution(&self) -> Vec<f64> {
        self.x0.iter().map(|v| v.max(0.0)).collect()
    }

    /// Multiplier `λ* = diag(2 max(−x₀, 0))`.
    pub fn multiplier(&self) -> SymMatrix {
        SymMatrix::diag(&self.x0.iter().map(|v| 2.0 * (-v).max(0.0)).collect::<Vec<_>>())
    }

    pub fn optimal_value(&self) -> f64 {
        self.x0.iter().map(|v| v.min(0.0).powi(2)).sum()
    }
}

impl NlsdpModel for BoxQpSdp {
    fn dim(&self) -> usize {
        self.x0.len()
    }
    fn block_dim(&self) -> usize {
        self.x0.len()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x0).map(|(a, b)| (a - b).powi(2)).sum()
    }
    fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x0).map(|(a, b)| 2.0 * (a - b)).collect()
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::identity(self.dim()).scaled(2.0))
    }
    fn constraint(&self, x: &[f64]) -> Option<SymMatrix> {
        Some(SymMatrix::diag(&x.iter().map(|v| -v).collect::<Vec<_>>()))
    }
    fn constraint_partials(&self, _x: &[f64]) -> Vec<SymMatrix> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = -1.0;
                SymMatrix::diag(&e)
            })
            .collect()
    }
    fn constraint_second(&self, _x: &[f64]) -> Option<Vec<Vec<SymMatrix>>> {
        zero_second(self.dim(), self.dim())
    }
}

/// Nearest unit-diagonal PSD 2×2 matrix to `C`:
/// `X = [[x₁, x₂], [x₂, x₃]]`, `min ‖X − C‖²_F` s.t. `−X ⪯ 0`, `x₁ = x₃ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCorr2 {
    pub c: [[f64; 2]; 2],
}

impl NearestCorr2 {
    /// Closed-form KKT triple `(x*, λ*, μ*)` and optimal value.
    pub fn solution(&self) -> (Vec<f64>, SymMatrix, Vec<f64>, f64) {
        let c12 = self.c[0][1];
        let rho = c12.clamp(-1.0, 1.0);
        let x = vec![1.0, rho, 1.0];
        // λ* = t·vvᵀ·2 where v spans the null space of X*.
        let (t, sign) = if c12 > 1.0 {
            (2.0 * (c12 - 1.0), -1.0)
        } else if c12 < -1.0 {
            (-2.0 * (1.0 + c12), 1.0)
        } else {
            (0.0, 0.0)
        };
        let lambda = SymMatrix::from_rows(&[vec![t, sign * t], vec![sign * t, t]]).unwrap();
        let mu = vec![t - 2.0 * (1.0 - self.c[0][0]), t - 2.0 * (1.0 - self.c[1][1])];
        let f = (1.0 - self.c[0][0]).powi(2) + 2.0 * (rho - c12).powi(2) + (1.0 - self.c[1][1]).powi(2);
        (x, lambda, mu, f)
    }
}

impl NlsdpModel for NearestCorr2 {
    fn dim(&self) -> usize {
        3
    }
    fn block_dim(&self) -> usize {
        2
    }
    fn eq_count(&self) -> usize {
        2
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (x[0] - self.c[0][0]).powi(2)
            + 2.0 * (x[1] - self.c[0][1]).powi(2)
            + (x[2] - self.c[1][1]).powi(2)
    }
    fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        vec![
            2.0 * (x[0] - self.c[0][0]),
            4.0 * (x[1] - self.c[0][1]),
            2.0 * (x[2] - self.c[1][1]),
        ]
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (2, 2) => 2.0,
            (1, 1) => 4.0,
            _ => 0.0,
        }))
    }
    fn constraint(&self, x: &[f64]) -> Option<SymMatrix> {
        Some(SymMatrix::from_upper(2, |i, j| -x[i + j]))
    }
    fn constraint_partials(&self, _x: &[f64]) -> Vec<SymMatrix> {
        (0..3)
            .map(|k| SymMatrix::from_upper(2, |i, j| if i + j == k { -1.0 } else { 0.0 }))
            .collect()
    }
    fn constraint_second(&self, _x: &[f64]) -> Option<Vec<Vec<SymMatrix>>> {
        zero_second(3, 2)
    }
    fn equality(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] - 1.0, x[2] - 1.0]
    }
    fn equality_jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap()
    }
    fn equality_hessians(&self, _x: &[f64]) -> Option<Vec<Matrix>> {
        Some(vec![Matrix::zeros(3, 3), Matrix::zeros(3, 3)])
    }
}

/// `min 0` s.t. `x = 0`: a flat objective with one equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatEq;

impl NlsdpModel for FlatEq {
    fn dim(&self) -> usize {
        1
    }
    fn eq_count(&self) -> usize {
        1
    }
    fn objective(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn objective_grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(1, 1))
    }
    fn equality(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }
    fn equality_jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
    fn equality_hessians(&self, _x: &[f64]) -> Option<Vec<Matrix>> {
        Some(vec![Matrix::zeros(1, 1)])
    }
}

/// `min ‖x − center‖²` with no constraints (`l = s = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedQuadratic {
    pub center: Vec<f64>,
}

impl NlsdpModel for UnconstrainedQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum()
    }
    fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| 2.0 * (a - b)).collect()
    }
    fn objective_hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::identity(self.dim()).scaled(2.0))
    }
}

/// Penalty form `min x` s.t. `g(x) = x = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EqLinear;

impl PenaltyModel for EqLinear {
    fn dim(&self) -> usize {
        1
    }
    fn constraint_dim(&self) -> usize {
        1
    }
    fn objective(&self, x: &[f64]) -> ExtReal {
        ExtReal::Finite(x[0])
    }
    fn objective_grad(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }
    fn constraint(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }
    fn constraint_jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
}
