//! Dense complex linear algebra at desk scale.
//!
//! Everything here is sized for problems with `d, k <= 64`: Hermitian
//! matrices are stored row-major as full grids, and the eigensolver is a
//! cyclic complex Jacobi method built from unitary 2x2 plane rotations.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Sweep budget for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius mass, relative to `||A||_F`, at which Jacobi stops.
pub const JACOBI_REL_TOL: f64 = 1e-13;
/// Absolute tolerance on `A[i][j] - conj(A[j][i])` for Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix must be square, row {row} has {len} entries for dimension {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: |A[{row}][{col}] - conj(A[{col}][{row}])| = {gap:e}")]
    NotHermitian { row: usize, col: usize, gap: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("dimension must be positive")]
    EmptyDimension,
}

/// A column vector in `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn new(entries: Vec<C64>) -> Self {
        CVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); dim])
    }

    /// Standard basis vector `e_index` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(entries: &[f64]) -> Self {
        CVector(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product `<self, other> = sum_i self_i * conj(other_i)`, linear in
    /// the first argument.
    pub fn inner(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| x * y.conj())
            .sum()
    }

    /// Real part of the inner product; the metric used on `C^d` viewed as `R^{2d}`.
    pub fn real_inner(&self, other: &CVector) -> f64 {
        self.inner(other).re
    }

    pub fn scale(&self, factor: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scale_complex(&self, factor: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * factor).collect())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: C64, other: &CVector) -> CVector {
        debug_assert_eq!(self.dim(), other.dim());
        CVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| x + alpha * y)
                .collect(),
        )
    }

    /// Linear combination `sum_j coeffs[j] * basis[j]`.
    pub fn combine(basis: &[CVector], coeffs: &[C64]) -> CVector {
        debug_assert_eq!(basis.len(), coeffs.len());
        let dim = basis.first().map_or(0, CVector::dim);
        let mut out = CVector::zeros(dim);
        for (b, &w) in basis.iter().zip(coeffs) {
            for (o, x) in out.0.iter_mut().zip(&b.0) {
                *o += w * x;
            }
        }
        out
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        self.axpy(C64::new(1.0, 0.0), rhs)
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        self.axpy(C64::new(-1.0, 0.0), rhs)
    }
}

impl Mul<f64> for &CVector {
    type Output = CVector;
    fn mul(self, rhs: f64) -> CVector {
        self.scale(rhs)
    }
}

/// Dense Hermitian matrix, stored symmetrized in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * dim + i] = C64::new(x, 0.0);
        }
        m
    }

    /// Builds a Hermitian matrix from rows, rejecting anything further than
    /// [`HERMITIAN_TOL`] from Hermitian.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, LinalgError> {
        Self::from_rows_with_tol(rows, HERMITIAN_TOL)
    }

    /// Like [`HermitianMatrix::from_rows`] with a caller-chosen tolerance.
    /// The stored matrix is `(A + A*) / 2`.
    pub fn from_rows_with_tol(rows: Vec<Vec<C64>>, tol: f64) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, entries) in rows.into_iter().enumerate() {
            if entries.len() != dim {
                return Err(LinalgError::NotSquare {
                    row,
                    len: entries.len(),
                    dim,
                });
            }
            for (col, z) in entries.into_iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LinalgError::NonFinite { row, col });
                }
                data.push(z);
            }
        }
        let mut m = HermitianMatrix { dim, data };
        for i in 0..dim {
            for j in i..dim {
                let upper = m.data[i * dim + j];
                let lower = m.data[j * dim + i];
                let gap = (upper - lower.conj()).norm();
                if gap > tol {
                    return Err(LinalgError::NotHermitian {
                        row: i,
                        col: j,
                        gap,
                    });
                }
                let avg = (upper + lower.conj()) * 0.5;
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg.conj();
            }
            m.data[i * dim + i].im = 0.0;
        }
        Ok(m)
    }

    /// `v v*`.
    pub fn outer(v: &CVector) -> Self {
        let mut m = Self::zeros(v.dim());
        m.add_outer(v, 1.0);
        m
    }

    /// In-place `self += weight * v v*`.
    pub fn add_outer(&mut self, v: &CVector, weight: f64) {
        let n = self.dim;
        debug_assert_eq!(v.dim(), n);
        for i in 0..n {
            let vi = v[i] * weight;
            for j in 0..n {
                self.data[i * n + j] += vi * v[j].conj();
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(<[C64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|A[i][j] - conj(A[j][i])|`; zero for anything built by this module.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `A + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        let n = self.dim;
        debug_assert_eq!(v.dim(), n);
        CVector::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
                .collect(),
        )
    }

    /// Real trace inner product `Re tr(A B)`.
    pub fn trace_inner(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `U A U*`, where `columns[j]` is the j-th column of `U`.
    pub fn conjugate_by(&self, columns: &[CVector]) -> Result<HermitianMatrix, LinalgError> {
        let n = self.dim;
        if columns.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                actual: columns.len(),
            });
        }
        if let Some(bad) = columns.iter().find(|c| c.dim() != n) {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                actual: bad.dim(),
            });
        }
        let u = |i: usize, j: usize| columns[j][i];
        let mut t = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                t[i * n + l] = (0..n).map(|j| u(i, j) * self.data[j * n + l]).sum();
            }
        }
        let mut out = HermitianMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                out.data[i * n + k] = (0..n).map(|l| t[i * n + l] * u(k, l).conj()).sum();
            }
        }
        out.symmetrize();
        Ok(out)
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
            self.data[i * n + i].im = 0.0;
        }
    }

    fn off_diagonal_norm(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.data[i * n + j].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Spectral decomposition `A = sum_i eigenvalues[i] v_i v_i*`.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal; `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Vec<CVector>,
}

impl EigDecomposition {
    pub fn reconstruct(&self) -> HermitianMatrix {
        let dim = self.eigenvalues.len();
        let mut m = HermitianMatrix::zeros(dim);
        for (&lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m.add_outer(v, lam);
        }
        m
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back non-increasing. Degenerate eigenvalues get no
/// special treatment: any orthonormal basis of the eigenspace may be
/// returned.
pub fn herm_eig(a: &HermitianMatrix) -> Result<EigDecomposition, LinalgError> {
    let (values, vectors) = jacobi(a, true)?;
    let vectors = vectors.expect("vectors requested");
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&col| CVector::new((0..n).map(|row| vectors[row * n + col]).collect()))
        .collect();
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, non-increasing. Same rotations as [`herm_eig`] without
/// accumulating the eigenvector basis.
pub fn herm_eigenvalues(a: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let (mut values, _) = jacobi(a, false)?;
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

fn jacobi(a: &HermitianMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<C64>>), LinalgError> {
    let n = a.dim();
    if !a.is_finite() {
        let bad = a.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()));
        let idx = bad.unwrap_or(0);
        return Err(LinalgError::NonFinite {
            row: idx / n.max(1),
            col: idx % n.max(1),
        });
    }
    let mut m = a.clone();
    m.symmetrize();
    let mut v = want_vectors.then(|| HermitianMatrix::identity(n).data);
    let scale = m.frobenius_norm();
    let tol = JACOBI_REL_TOL * scale;

    let mut converged = scale == 0.0 || n < 2;
    let mut sweeps = 0;
    while !converged {
        if m.off_diagonal_norm() <= tol {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut m, v.as_deref_mut(), p, q);
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            sweeps,
            residual: m.off_diagonal_norm(),
        });
    }
    Ok((m.diagonal(), v))
}

/// One unitary rotation `U = D R` annihilating `m[p][q]`, where
/// `D = diag(1, e^{-i phi})` makes the pivot real and `R` is the real
/// Jacobi rotation of the resulting symmetric 2x2 block.
fn rotate(m: &mut HermitianMatrix, v: Option<&mut [C64]>, p: usize, q: usize) {
    let n = m.dim;
    let apq = m.data[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m.data[p * n + p].re;
    let aqq = m.data[q * n + q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let phase_conj = (apq / r).conj();
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    for k in 0..n {
        let xp = m.data[k * n + p];
        let xq = m.data[k * n + q];
        m.data[k * n + p] = xp * u_pp + xq * u_qp;
        m.data[k * n + q] = xp * u_pq + xq * u_qq;
    }
    for k in 0..n {
        let xp = m.data[p * n + k];
        let xq = m.data[q * n + k];
        m.data[p * n + k] = u_pp.conj() * xp + u_qp.conj() * xq;
        m.data[q * n + k] = u_pq.conj() * xp + u_qq.conj() * xq;
    }
    m.data[p * n + p] = C64::new(app - t * r, 0.0);
    m.data[q * n + q] = C64::new(aqq + t * r, 0.0);
    m.data[p * n + q] = C64::new(0.0, 0.0);
    m.data[q * n + p] = C64::new(0.0, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let xp = v[k * n + p];
            let xq = v[k * n + q];
            v[k * n + p] = xp * u_pp + xq * u_qp;
            v[k * n + q] = xp * u_pq + xq * u_qq;
        }
    }
}

/// Frame operator of a list of vectors: `sum_i g_i g_i*`.
pub fn rank_one_sum(dim: usize, vectors: &[CVector]) -> Result<HermitianMatrix, LinalgError> {
    let mut m = HermitianMatrix::zeros(dim);
    for v in vectors {
        if v.dim() != dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        m.add_outer(v, 1.0);
    }
    m.symmetrize();
    Ok(m)
}

/// Singular values of a Hermitian matrix: `|lambda_i|`, sorted non-increasing.
pub fn singular_values(a: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let mut s: Vec<f64> = herm_eigenvalues(a)?.into_iter().map(f64::abs).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}
