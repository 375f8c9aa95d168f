//! Dense symmetric matrices and the small amount of linear algebra the merit
//! functions need: a cyclic Jacobi eigensolver, projections onto the PSD and
//! NSD cones, the Moore–Penrose pseudoinverse and null-space bases.
//!
//! Everything here is sized for desk-scale blocks (`l` up to a few dozen).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Relative asymmetry accepted (then averaged away) by [`SymMatrix::from_rows`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Row-major dense matrix with arbitrary shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from a list of equal-length rows. An empty list gives a `0 × 0` matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_rows",
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>], rows: usize) -> Self {
        Matrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] += self[(i, j)] * v[i];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: f64, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_scaled shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense real symmetric `l × l` matrix. Both triangles are stored and kept equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be >= 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds from the upper triangle: `f(i, j)` is called for `i <= j` only.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from full rows, replacing the input by `(A + Aᵀ)/2`.
    ///
    /// Rejects inputs whose asymmetry `‖A − Aᵀ‖_F / 2` exceeds
    /// `1e-8 · ‖A‖_F`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "symmetric matrix must have dimension >= 1".into(),
            ));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "SymMatrix::from_rows",
                expected: dim,
                found: bad.len(),
            });
        }
        let norm = rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let mut asym = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let d = 0.5 * (rows[i][j] - rows[j][i]);
                asym += d * d;
            }
        }
        let asym = asym.sqrt();
        let limit = SYMMETRY_TOL * norm;
        if asym > limit {
            return Err(Error::Asymmetric {
                asymmetry: asym,
                limit,
            });
        }
        Ok(SymMatrix::from_upper(dim, |i, j| {
            0.5 * (rows[i][j] + rows[j][i])
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖A‖_F² = trace(A²)`.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `⟨A, B⟩ = trace(AB)`; panics on dimension mismatch.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "SymMatrix::inner dimension mismatch");
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "SymMatrix::add_scaled dimension mismatch");
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.add_scaled(-1.0, other)
    }

    /// General (non-symmetric) product `self · other`.
    pub fn matmul(&self, other: &SymMatrix) -> Matrix {
        self.as_matrix().matmul(&other.as_matrix())
    }

    /// Symmetric product `AB + BA`.
    pub fn anticommutator(&self, other: &SymMatrix) -> SymMatrix {
        let ab = self.matmul(other);
        SymMatrix::from_upper(self.dim, |i, j| ab[(i, j)] + ab[(j, i)])
    }

    /// Congruence `Eᵀ A E` for an `l × k` matrix `E`; `None` when `k = 0`.
    pub fn congruence(&self, e: &Matrix) -> Option<SymMatrix> {
        assert_eq!(e.rows(), self.dim, "congruence shape mismatch");
        if e.cols() == 0 {
            return None;
        }
        let ae = self.as_matrix().matmul(e);
        let prod = e.transpose().matmul(&ae);
        Some(SymMatrix::from_upper(e.cols(), |i, j| {
            0.5 * (prod[(i, j)] + prod[(j, i)])
        }))
    }

    /// Quadratic form `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    /// Number of free coordinates `l(l+1)/2`.
    pub fn coord_len(dim: usize) -> usize {
        dim * (dim + 1) / 2
    }

    /// Upper triangle, row-major.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::coord_len(self.dim));
        for i in 0..self.dim {
            for j in i..self.dim {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn from_coords(dim: usize, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), Self::coord_len(dim), "coordinate length");
        let mut it = coords.iter();
        SymMatrix::from_upper(dim, |_, _| *it.next().unwrap())
    }

    /// Maps a Frobenius gradient to the gradient with respect to upper-triangle
    /// coordinates (off-diagonal entries count twice).
    pub fn gradient_to_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::coord_len(self.dim));
        for i in 0..self.dim {
            for j in i..self.dim {
                let g = self.get(i, j);
                out.push(if i == j { g } else { 2.0 * g });
            }
        }
        out
    }
}

/// `⟨A, B⟩ = trace(AB)`.
pub fn frobenius_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "frobenius_inner",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.inner(b))
}

// Folding from +0.0: an empty `Sum` of f64 yields -0.0.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiConfig {
    pub max_sweeps: usize,
    /// Sweeps stop once the off-diagonal Frobenius norm is below `off_tol · ‖A‖_F`.
    pub off_tol: f64,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        JacobiConfig {
            max_sweeps: 100,
            off_tol: 1e-12,
        }
    }
}

/// Eigendecomposition `A = Q diag(e) Qᵀ`, eigenvalues nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigDecomp {
    /// `Q diag(f(e)) Qᵀ`.
    pub fn reassemble(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let fe: Vec<f64> = self.eigenvalues.iter().map(|&e| f(e)).collect();
        SymMatrix::from_upper(n, |i, j| {
            (0..n)
                .filter(|&k| fe[k] != 0.0)
                .map(|k| q[(i, k)] * fe[k] * q[(j, k)])
                .sum()
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

pub fn eig_sym(a: &SymMatrix) -> Result<EigDecomp> {
    eig_sym_with(a, &JacobiConfig::default())
}

/// Cyclic Jacobi eigensolver.
pub fn eig_sym_with(a: &SymMatrix, cfg: &JacobiConfig) -> Result<EigDecomp> {
    if !a.is_finite() {
        return Err(Error::NonFinite("eig_sym input".into()));
    }
    let n = a.dim();
    let mut m = a.as_matrix();
    let mut v = Matrix::identity(n);
    let tol = cfg.off_tol * a.frobenius_norm();

    let off_norm = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * m[(p, q)] * m[(p, q)];
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..cfg.max_sweeps {
        if off_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let residual = off_norm(&m);
        if residual > tol {
            return Err(Error::NoConvergence {
                sweeps: cfg.max_sweeps,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&k| m[(k, k)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Frobenius-nearest PSD matrix, `[A]₊`.
pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(eig_sym(a)?.reassemble(|e| e.max(0.0)))
}

/// Frobenius-nearest NSD matrix, `A − [A]₊`.
pub fn project_nsd(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(eig_sym(a)?.reassemble(|e| e.min(0.0)))
}

/// `trace([A]₊²)`, the squared distance from `A` to the NSD cone.
pub fn psd_part_norm_sq(eig: &EigDecomp) -> f64 {
    eig.eigenvalues.iter().map(|e| e.max(0.0).powi(2)).sum()
}

/// Moore–Penrose pseudoinverse; eigenvalues with `|e| <= rank_tol · max|e|`
/// are treated as zero.
pub fn pseudoinverse(a: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    check_rank_tol(rank_tol)?;
    let eig = eig_sym(a)?;
    let cut = rank_tol * eig.max_abs_eigenvalue();
    Ok(eig.reassemble(|e| if e.abs() > cut { 1.0 / e } else { 0.0 }))
}

/// Orthonormal null-space basis (as columns) and the rank.
#[derive(Debug, Clone, PartialEq)]
pub struct NullBasis {
    pub basis: Matrix,
    pub rank: usize,
}

/// Eigenvectors for eigenvalues with `|e| <= rank_tol · max(max|e|, 1)`.
pub fn null_basis(a: &SymMatrix, rank_tol: f64) -> Result<NullBasis> {
    check_rank_tol(rank_tol)?;
    let eig = eig_sym(a)?;
    Ok(null_basis_from(&eig, rank_tol))
}

pub fn null_basis_from(eig: &EigDecomp, rank_tol: f64) -> NullBasis {
    let n = eig.eigenvalues.len();
    let cut = rank_tol * eig.max_abs_eigenvalue().max(1.0);
    let null: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() <= cut)
        .collect();
    let basis = Matrix::from_fn(n, null.len(), |i, j| eig.eigenvectors[(i, null[j])]);
    NullBasis {
        rank: n - null.len(),
        basis,
    }
}

fn check_rank_tol(rank_tol: f64) -> Result<()> {
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    Ok(())
}

/// One-sided (Hestenes) Jacobi SVD of an `m × n` matrix.
///
/// Returns the `n` singular values (unsorted, paired with the columns of
/// `V`) and the right singular vectors `V`. Columns of `V` whose singular
/// value is zero span the null space of `A`.
pub fn svd_right(a: &Matrix) -> (Vec<f64>, Matrix) {
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += u[(i, p)] * u[(i, p)];
                    beta += u[(i, q)] * u[(i, q)];
                    gamma += u[(i, p)] * u[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n)
        .map(|j| (0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt())
        .collect();
    (sigma, v)
}

/// Orthonormal basis (columns) of `{v : A v = 0}` for an `m × n` matrix,
/// cutting singular values at `rel_tol · max(σ_max, 1)`.
pub fn matrix_null_space(a: &Matrix, rel_tol: f64) -> Matrix {
    let n = a.cols();
    if a.rows() == 0 {
        return Matrix::identity(n);
    }
    let (sigma, v) = svd_right(a);
    let smax = sigma.iter().fold(0.0_f64, |m, s| m.max(*s));
    let cut = rel_tol * smax.max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&j| sigma[j] <= cut).collect();
    Matrix::from_fn(n, keep.len(), |i, j| v[(i, keep[j])])
}
