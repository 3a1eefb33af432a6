//! Dense vectors and matrices sized for desk-scale problems.
//!
//! Everything the solvers and certificates need fits in a few dozen rows, so
//! this module favours simplicity over speed: row-major `Vec<f64>` storage,
//! cyclic Jacobi for symmetric eigenvalues, Cholesky for SPD solves.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Jacobi sweeps are capped; matrices here are at most a few dozen rows and
/// converge in a handful of sweeps.
const JACOBI_SWEEP_LIMIT: usize = 100;
/// Off-diagonal tolerance for Jacobi convergence, scaled by the Frobenius norm.
const JACOBI_TOL: f64 = 1e-12;
/// A weight matrix counts as PSD when its smallest eigenvalue clears this.
pub const PSD_TOL: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    NotSquare { rows: usize, cols: usize },
    NotSymmetric { max_asymmetry: f64 },
    NotPositiveDefinite { pivot: f64, index: usize },
    NearSingular { min_eigenvalue: f64, max_eigenvalue: f64 },
    IndefiniteWeight { min_eigenvalue: f64 },
    DimensionMismatch { expected: usize, got: usize },
    NotFinite,
    NoConvergence { off_diagonal: f64 },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            LinalgError::NotSymmetric { max_asymmetry } => {
                write!(f, "matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")
            }
            LinalgError::NotPositiveDefinite { pivot, index } => {
                write!(f, "matrix is not positive definite (pivot {pivot:e} at index {index})")
            }
            LinalgError::NearSingular { min_eigenvalue, max_eigenvalue } => write!(
                f,
                "matrix is singular or near-singular (eigenvalue range [{min_eigenvalue:e}, {max_eigenvalue:e}])"
            ),
            LinalgError::IndefiniteWeight { min_eigenvalue } => {
                write!(f, "weight matrix is indefinite (min eigenvalue {min_eigenvalue:e})")
            }
            LinalgError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            LinalgError::NotFinite => write!(f, "matrix or vector contains a non-finite entry"),
            LinalgError::NoConvergence { off_diagonal } => {
                write!(f, "eigenvalue iteration did not converge (off-diagonal {off_diagonal:e})")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

/// Dense column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn from_slice(xs: &[f64]) -> Self {
        Vector { data: xs.to_vec() }
    }

    pub fn zeros(n: usize) -> Self {
        Vector { data: vec![0.0; n] }
    }

    pub fn ones(n: usize) -> Self {
        Vector { data: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot of length {} with {}", self.len(), other.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "add of length {} with {}", self.len(), other.len());
        Vector { data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect() }
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector { data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        Vector { data }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = d[i];
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NotFinite);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.data[i * self.cols + j] == 0.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.len(), "matvec of {}x{} with length {}", self.rows, self.cols, x.len());
        let mut out = Vector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul of {}x{} with {}x{}", self.rows, self.cols, other.rows, other.cols);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn ensure_square(&self) -> Result<usize, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.rows)
    }

    fn ensure_symmetric(&self) -> Result<usize, LinalgError> {
        let n = self.ensure_square()?;
        let scale = 1.0 + self.max_abs();
        let mut gap = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                gap = gap.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        if gap > 1e-10 * scale {
            return Err(LinalgError::NotSymmetric { max_asymmetry: gap });
        }
        Ok(n)
    }

    /// Smallest and largest eigenvalue of a symmetric matrix.
    ///
    /// Closed forms for n <= 2, cyclic Jacobi above that.
    pub fn extreme_eigenvalues_symmetric(&self) -> Result<(f64, f64), LinalgError> {
        let n = self.ensure_symmetric()?;
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NotFinite);
        }
        if n == 0 {
            return Err(LinalgError::DimensionMismatch { expected: 1, got: 0 });
        }
        if n == 1 {
            return Ok((self.data[0], self.data[0]));
        }
        if n == 2 {
            let (a, b, d) = (self.data[0], 0.5 * (self.data[1] + self.data[2]), self.data[3]);
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            return Ok((mean - r, mean + r));
        }
        let mut m = self.data.clone();
        let tol = JACOBI_TOL * self.frobenius_norm().max(1.0);
        let mut converged = false;
        for _ in 0..JACOBI_SWEEP_LIMIT {
            let off: f64 = {
                let mut s = 0.0;
                for p in 0..n {
                    for q in (p + 1)..n {
                        s += 2.0 * m[p * n + q] * m[p * n + q];
                    }
                }
                s.sqrt()
            };
            if off <= tol {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let phi = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                    let t = phi.signum() / (phi.abs() + (phi * phi + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // M <- M G, then M <- G^T M  (G the Givens rotation in plane p,q)
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = c * mkp - s * mkq;
                        m[k * n + q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = c * mpk - s * mqk;
                        m[q * n + k] = s * mpk + c * mqk;
                    }
                }
            }
        }
        if !converged {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| 2.0 * m[p * n + q] * m[p * n + q])
                .sum::<f64>()
                .sqrt();
            if off > tol {
                return Err(LinalgError::NoConvergence { off_diagonal: off });
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(m[i * n + i]);
            hi = hi.max(m[i * n + i]);
        }
        Ok((lo, hi))
    }

    /// Largest singular value, via the symmetric eigenproblem on the smaller Gram matrix.
    pub fn largest_singular_value(&self) -> Result<f64, LinalgError> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0.0);
        }
        let gram =
            if self.rows <= self.cols { self.matmul(&self.transpose()) } else { self.transpose().matmul(self) };
        let (_, hi) = gram.extreme_eigenvalues_symmetric()?;
        Ok(hi.max(0.0).sqrt())
    }

    /// Smallest eigenvalue of (A A^T)^{1/2}, the row-space singular-value floor.
    pub fn smallest_row_singular_value(&self) -> Result<f64, LinalgError> {
        let gram = self.matmul(&self.transpose());
        let (lo, _) = gram.extreme_eigenvalues_symmetric()?;
        Ok(lo.max(0.0).sqrt())
    }

    fn cholesky(&self) -> Result<CholeskyFactor, LinalgError> {
        let n = self.ensure_symmetric()?;
        let scale = (0..n).fold(1.0f64, |m, i| m.max(self.data[i * n + i].abs()));
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.data[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 1e-14 * scale {
                return Err(LinalgError::NotPositiveDefinite { pivot: d, index: j });
            }
            l[j * n + j] = d.sqrt();
            for i in (j + 1)..n {
                let mut acc = self.data[i * n + j];
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = acc / l[j * n + j];
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    /// Solve P x = b for symmetric positive definite P via Cholesky.
    pub fn solve_spd(&self, b: &Vector) -> Result<Vector, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        Ok(self.cholesky()?.solve(b))
    }

    /// Moore-Penrose pseudo-inverse A^+ = A^T (A A^T)^{-1} for full-row-rank A.
    pub fn pseudo_inverse(&self) -> Result<Matrix, LinalgError> {
        let gram = self.matmul(&self.transpose());
        let (lo, hi) = gram.extreme_eigenvalues_symmetric()?;
        if lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::NearSingular { min_eigenvalue: lo, max_eigenvalue: hi });
        }
        let chol = gram.cholesky()?;
        // Solve (A A^T) X = A column by column; the pseudo-inverse is X^T.
        let p = self.rows;
        let n = self.cols;
        let mut out = Matrix::zeros(n, p);
        for j in 0..n {
            let col = Vector::from(
                (0..p).map(|i| self.data[i * n + j]).collect::<Vec<_>>(),
            );
            let x = chol.solve(&col);
            for i in 0..p {
                out.data[j * p + i] = x[i];
            }
        }
        Ok(out)
    }

    /// Max eigenvalue modulus of a real 2x2 matrix; complex pairs have modulus sqrt(det).
    pub fn spectral_radius_2x2(&self) -> Result<f64, LinalgError> {
        if (self.rows, self.cols) != (2, 2) {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NotFinite);
        }
        let (a, b, c, d) = (self.data[0], self.data[1], self.data[2], self.data[3]);
        let half_tr = 0.5 * (a + d);
        let det = a * d - b * c;
        let disc = half_tr * half_tr - det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            Ok((half_tr + r).abs().max((half_tr - r).abs()))
        } else {
            // complex conjugate pair, both with modulus sqrt(det); det > 0 here
            Ok(det.sqrt())
        }
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

struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    fn solve(&self, b: &Vector) -> Vector {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.l[i * n + k] * y[k];
            }
            y[i] = acc / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= self.l[k * n + i] * x[k];
            }
            x[i] = acc / self.l[i * n + i];
        }
        Vector::from(x)
    }
}

/// x^T G x for a symmetric PSD weight G, clamped so round-off never turns it negative.
pub fn weighted_norm_sq(x: &Vector, g: &Matrix) -> Result<f64, LinalgError> {
    if g.rows() != x.len() {
        return Err(LinalgError::DimensionMismatch { expected: g.rows(), got: x.len() });
    }
    // Fast path: the all-zero weight shows up constantly (G = 0, H = 0).
    if g.is_zero() {
        g.ensure_square()?;
        return Ok(0.0);
    }
    let (lo, _) = g.extreme_eigenvalues_symmetric()?;
    if lo < PSD_TOL {
        return Err(LinalgError::IndefiniteWeight { min_eigenvalue: lo });
    }
    let val = x.dot(&g.matvec(x));
    if val < 0.0 && val >= -1e-12 * (1.0 + g.frobenius_norm() * x.norm_sq()) {
        return Ok(0.0);
    }
    Ok(val)
}
