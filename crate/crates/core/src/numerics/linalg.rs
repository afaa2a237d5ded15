//! Small dense matrices: Cholesky solves for Newton/IRLS steps and the 2×2
//! helpers used by the signed Wald machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHOLESKY_PIVOT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;
const SQRT_DET_TOL: f64 = 1e-14;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must have positive dimensions".into()));
        }
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<const C: usize>(rows: &[[f64; C]]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { rows: rows.len(), cols: C, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Symmetric to 1e-12 and smallest eigenvalue ≥ −1e-10.
    pub fn is_symmetric_psd(&self) -> bool {
        if !self.is_symmetric(SYMMETRY_TOL) {
            return false;
        }
        if self.rows == 2 {
            let (lo, _) = eigenvalues_2x2(self);
            return lo >= EIGEN_FLOOR;
        }
        let mut shifted = self.clone();
        for i in 0..self.rows {
            shifted[(i, i)] += -EIGEN_FLOOR;
        }
        cholesky_with_tol(&shifted, 0.0).is_ok()
    }

    /// Lower-triangular Cholesky factor.
    pub fn cholesky(&self) -> Result<Matrix> {
        cholesky_with_tol(self, CHOLESKY_PIVOT_TOL)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn cholesky_with_tol(m: &Matrix, tol: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension("Cholesky needs a square matrix".into()));
    }
    let n = m.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return Err(Error::NotPositiveDefinite { column: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `m x = b` for symmetric positive definite `m` via Cholesky.
pub fn solve_spd(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() || m.rows != b.len() {
        return Err(Error::Dimension(format!(
            "system {}x{} with right-hand side of length {}",
            m.rows,
            m.cols,
            b.len()
        )));
    }
    let l = m.cholesky()?;
    let n = b.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
pub fn eigenvalues_2x2(m: &Matrix) -> (f64, f64) {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

fn check_spd_2x2(m: &Matrix) -> Result<f64> {
    if m.rows != 2 || m.cols != 2 {
        return Err(Error::Dimension("expected a 2x2 matrix".into()));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::Degenerate("matrix is not symmetric".into()));
    }
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if !(det > SQRT_DET_TOL) || m[(0, 0)] < 0.0 || m[(1, 1)] < 0.0 {
        return Err(Error::Degenerate(format!("determinant {det:.3e} below tolerance")));
    }
    Ok(det)
}

/// Symmetric (principal) square root of a 2×2 symmetric positive definite
/// matrix: `(m + √det·I) / √(tr m + 2√det)`.
pub fn sym_sqrt_2x2(m: &Matrix) -> Result<Matrix> {
    let det = check_spd_2x2(m)?;
    let s = det.sqrt();
    let t = (m[(0, 0)] + m[(1, 1)] + 2.0 * s).sqrt();
    Ok(Matrix::from_rows(&[
        [(m[(0, 0)] + s) / t, m[(0, 1)] / t],
        [m[(1, 0)] / t, (m[(1, 1)] + s) / t],
    ]))
}

pub fn inverse_2x2(m: &Matrix) -> Result<Matrix> {
    let det = check_spd_2x2(m)?;
    Ok(Matrix::from_rows(&[
        [m[(1, 1)] / det, -m[(0, 1)] / det],
        [-m[(1, 0)] / det, m[(0, 0)] / det],
    ]))
}
