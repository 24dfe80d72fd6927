//! Small dense/sparse kernels backing the truncated SVD.
//!
//! Dense blocks are stored column-major (`Vec` of columns) because every
//! consumer here works column by column: Gram-Schmidt, Jacobi rotations
//! and products against a tall sparse matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    rows: usize,
    cols: Vec<Vec<f64>>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, ncols: usize) -> Self {
        ColMatrix {
            rows,
            cols: vec![vec![0.0; rows]; ncols],
        }
    }

    pub fn from_columns(rows: usize, cols: Vec<Vec<f64>>) -> Self {
        debug_assert!(cols.iter().all(|c| c.len() == rows));
        ColMatrix { rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.cols[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    /// Orthonormalizes the columns in place with modified Gram-Schmidt,
    /// applied twice for stability. Columns that are numerically in the
    /// span of their predecessors become exact zeros. Returns the number
    /// of non-zero columns left.
    pub fn orthonormalize(&mut self) -> usize {
        let mut rank = 0;
        for j in 0..self.cols.len() {
            let original = norm(&self.cols[j]);
            if original == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for i in 0..j {
                    let (head, tail) = self.cols.split_at_mut(j);
                    let qi = &head[i];
                    let proj = dot(qi, &tail[0]);
                    if proj != 0.0 {
                        axpy(-proj, qi, &mut tail[0]);
                    }
                }
            }
            let nrm = norm(&self.cols[j]);
            if nrm <= original * 1e-12 {
                self.cols[j].iter_mut().for_each(|x| *x = 0.0);
            } else {
                self.cols[j].iter_mut().for_each(|x| *x /= nrm);
                rank += 1;
            }
        }
        rank
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Compressed sparse rows; one row per document.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(column, value)` rows. Columns must be below `ncols`.
    pub fn from_rows<'a, I>(ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u32], &'a [f64])>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, val) in rows {
            debug_assert!(idx.iter().all(|&c| (c as usize) < ncols));
            indices.extend_from_slice(idx);
            values.extend_from_slice(val);
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.values)
    }

    /// `A * X` for a dense `ncols x k` block; result is `nrows x k`.
    pub fn mul(&self, x: &ColMatrix) -> ColMatrix {
        debug_assert_eq!(x.rows(), self.ncols);
        let mut out = ColMatrix::zeros(self.nrows, x.ncols());
        for (j, xc) in x.columns().iter().enumerate() {
            let oc = out.col_mut(j);
            for (i, o) in oc.iter_mut().enumerate() {
                let (idx, val) = self.row(i);
                *o = idx.iter().zip(val).map(|(&c, v)| v * xc[c as usize]).sum();
            }
        }
        out
    }

    /// `A^T * Y` for a dense `nrows x k` block; result is `ncols x k`.
    pub fn tmul(&self, y: &ColMatrix) -> ColMatrix {
        debug_assert_eq!(y.rows(), self.nrows);
        let mut out = ColMatrix::zeros(self.ncols, y.ncols());
        for (j, yc) in y.columns().iter().enumerate() {
            let oc = out.col_mut(j);
            for (i, &yi) in yc.iter().enumerate() {
                if yi == 0.0 {
                    continue;
                }
                let (idx, val) = self.row(i);
                for (&c, v) in idx.iter().zip(val) {
                    oc[c as usize] += v * yi;
                }
            }
        }
        out
    }
}

/// Thin SVD of a tall block `M = W * J^T` computed by one-sided
/// (Hestenes) Jacobi rotations. On return the columns of `W` are
/// mutually orthogonal; `singular_values[k] = |W_k|` and the normalized
/// columns are the left singular vectors of `M`.
#[derive(Debug, Clone)]
pub struct JacobiSvd {
    /// Left singular vectors (unit columns; zero where the singular value is 0),
    /// sorted by decreasing singular value.
    pub left: ColMatrix,
    pub singular_values: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

pub fn jacobi_svd(m: &ColMatrix, max_sweeps: usize) -> JacobiSvd {
    let mut w = m.clone();
    let n = w.ncols();
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (head, tail) = w.cols.split_at_mut(j);
                let (ci, cj) = (&mut head[i], &mut tail[0]);
                let alpha = dot(ci, ci);
                let beta = dot(cj, cj);
                let gamma = dot(ci, cj);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + sqrt(1.0 + zeta * zeta));
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        converged = !rotated;
    }
    let mut order: Vec<(f64, usize)> = (0..n).map(|k| (norm(w.col(k)), k)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let rows = w.rows();
    let mut cols = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    for &(s, k) in &order {
        let mut col = core::mem::take(&mut w.cols[k]);
        if s > 0.0 {
            col.iter_mut().for_each(|x| *x /= s);
        }
        cols.push(col);
        singular_values.push(s);
    }
    JacobiSvd {
        left: ColMatrix::from_columns(rows, cols),
        singular_values,
        sweeps,
        converged,
    }
}
