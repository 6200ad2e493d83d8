//! Dense row-major matrices and the Cholesky routines the GP needs.

use serde::{Deserialize, Serialize};

use super::NumError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumError::ShapeMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != other.rows {
            return Err(NumError::ShapeMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.rows != other.rows {
            return Err(NumError::ShapeMismatch(format!(
                "t_matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != other.cols {
            return Err(NumError::ShapeMismatch(format!(
                "matmul_t {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
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

const BLOCK: usize = 32;
const KBLOCK: usize = 8;

/// Inner product with eight independent partial sums (lets the compiler
/// vectorize; the summation order is fixed, so results are reproducible).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = a`. Only the lower
/// triangle of `a` is read.
pub fn cholesky(a: &Matrix) -> Result<Matrix, NumError> {
    let n = a.rows;
    if a.cols != n {
        return Err(NumError::ShapeMismatch(format!(
            "cholesky of {}x{}",
            a.rows, a.cols
        )));
    }
    let mut l = Matrix::zeros(n, n);
    // Rows are processed in blocks so each finished row `j` is reused by the
    // whole block while cached. Every entry is the same dot product as in the
    // plain row-by-row algorithm.
    for i0 in (0..n).step_by(BLOCK) {
        let i1 = (i0 + BLOCK).min(n);
        for j in 0..i1 {
            for i in i0.max(j)..i1 {
                let s = dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                if i == j {
                    let d = a[(i, i)] - s;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(NumError::NotPositiveDefinite { pivot: i });
                    }
                    l.data[i * n + i] = d.sqrt();
                } else {
                    l.data[i * n + j] = (a[(i, j)] - s) / l.data[j * n + j];
                }
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.rows;
    for i in 0..n {
        let s = dot(&l.data[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / l.data[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn backward_substitute_t(l: &Matrix, b: &mut [f64]) {
    let n = l.rows;
    for i in (0..n).rev() {
        b[i] /= l.data[i * n + i];
        let bi = b[i];
        for k in 0..i {
            b[k] -= l.data[i * n + k] * bi;
        }
    }
}

/// Solves `(L Lᵀ) x = b`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    forward_substitute(l, &mut x);
    backward_substitute_t(l, &mut x);
    x
}

/// `(L Lᵀ)⁻¹` from its Cholesky factor, as `XᵀX` with `X = L⁻¹`.
///
/// Both steps are written as row updates (axpy) so the inner loops carry no
/// reduction; loop blocking only changes memory traffic, every element is
/// accumulated in the same order.
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.rows;
    let ld = &l.data;
    // X = L⁻¹, lower triangular; row i depends on rows k < i.
    let mut x = vec![0.0; n * n];
    for i0 in (0..n).step_by(BLOCK) {
        let i1 = (i0 + BLOCK).min(n);
        let (done, block) = x.split_at_mut(i0 * n);
        for i in i0..i1 {
            block[(i - i0) * n + i] = 1.0;
        }
        for k in 0..i0 {
            let xk = &done[k * n..k * n + k + 1];
            for i in i0..i1 {
                let c = ld[i * n + k];
                let row = &mut block[(i - i0) * n..(i - i0) * n + k + 1];
                for (o, v) in row.iter_mut().zip(xk) {
                    *o -= c * v;
                }
            }
        }
        for i in i0..i1 {
            let (prev, cur) = block.split_at_mut((i - i0) * n);
            let row = &mut cur[..n];
            for k in i0..i {
                let c = ld[i * n + k];
                let xk = &prev[(k - i0) * n..(k - i0) * n + k + 1];
                for (o, v) in row[..=k].iter_mut().zip(xk) {
                    *o -= c * v;
                }
            }
            let d = ld[i * n + i];
            row[..=i].iter_mut().for_each(|o| *o /= d);
        }
    }
    // (XᵀX)[a][b] = Σ_k X[k][a]·X[k][b], k ≥ max(a, b); lower triangle first.
    let mut out = Matrix::zeros(n, n);
    for k0 in (0..n).step_by(KBLOCK) {
        let k1 = (k0 + KBLOCK).min(n);
        for a in 0..k1 {
            let orow = &mut out.data[a * n..a * n + a + 1];
            for k in k0.max(a)..k1 {
                let xa = x[k * n + a];
                for (o, v) in orow.iter_mut().zip(&x[k * n..k * n + a + 1]) {
                    *o += xa * v;
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            out.data[b * n + a] = out.data[a * n + b];
        }
    }
    out
}

/// `ln |L Lᵀ|`.
pub fn cholesky_log_det(l: &Matrix) -> f64 {
    (0..l.rows).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}
