use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BowError, SparseVector};
use crate::linalg::{axpy, dot, jacobi_svd, norm, ColMatrix};
use crate::math::sqrt;

/// Randomized subspace iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsaOptions {
    /// Extra sampled directions beyond the target rank.
    pub oversample: usize,
    /// Power iterations always performed.
    pub power_iterations: usize,
    /// Further iterations continue until the top singular values move
    /// by less than `tolerance * sigma_1`, up to `max_power_iterations`.
    pub tolerance: f64,
    pub max_power_iterations: usize,
    pub seed: u64,
}

impl Default for LsaOptions {
    fn default() -> Self {
        LsaOptions {
            oversample: 10,
            power_iterations: 7,
            tolerance: 1e-12,
            max_power_iterations: 500,
            seed: 0,
        }
    }
}

/// Rank-`r` projection onto the leading right singular directions of a
/// document-by-term matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    /// Row-major `dim x r`; column `k` is the k-th right singular vector.
    projection: Vec<f64>,
    singular_values: Vec<f64>,
    dim: usize,
    rank: usize,
}

impl LsaModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Entry `(term, component)` of the projection.
    pub fn projection(&self, term: usize, component: usize) -> f64 {
        self.projection[term * self.rank + component]
    }

    pub fn projection_column(&self, component: usize) -> Vec<f64> {
        (0..self.dim).map(|t| self.projection(t, component)).collect()
    }

    /// `|| A - A V V^T ||_F` for the rows of `matrix`.
    pub fn reconstruction_error(&self, matrix: &[SparseVector]) -> Result<f64, BowError> {
        let mut total = 0.0;
        for row in matrix {
            let coords = lsa_transform(row, self)?;
            let mut residual = row.to_dense();
            for (t, r) in residual.iter_mut().enumerate() {
                let back: f64 = (0..self.rank).map(|k| coords[k] * self.projection(t, k)).sum();
                *r -= back;
            }
            total += dot(&residual, &residual);
        }
        Ok(sqrt(total))
    }
}

pub fn lsa_fit(matrix: &[SparseVector], rank: usize) -> Result<LsaModel, BowError> {
    lsa_fit_with(matrix, rank, &LsaOptions::default())
}

/// Truncated SVD by randomized subspace iteration: a Gaussian sketch of
/// `rank + oversample` directions is refined by alternating products
/// with `A` and `A^T`, then the small projected block is diagonalized
/// with one-sided Jacobi rotations.
pub fn lsa_fit_with(matrix: &[SparseVector], rank: usize, opts: &LsaOptions) -> Result<LsaModel, BowError> {
    let a = super::tfidf_matrix(matrix)?;
    let (n, d) = (a.nrows(), a.ncols());
    let max_rank = n.min(d);
    if rank == 0 || rank > max_rank {
        return Err(BowError::InvalidRank { rank, max: max_rank });
    }
    if a.is_zero() {
        return Err(BowError::ZeroMatrix);
    }
    let width = (rank + opts.oversample).min(max_rank);
    let mut rng = crate::rng::seeded(opts.seed);
    let omega_cols = (0..width)
        .map(|_| (0..d).map(|_| crate::rng::standard_normal(&mut rng)).collect())
        .collect();
    let omega = ColMatrix::from_columns(d, omega_cols);
    let mut q = a.mul(&omega);
    q.orthonormalize();

    let max_iter = opts.max_power_iterations.max(opts.power_iterations);
    let mut previous: Option<Vec<f64>> = None;
    let mut iteration = 0;
    let svd = loop {
        // B^T = A^T Q, so the left singular vectors of B^T are the right
        // singular vectors of the projected block.
        let bt = a.tmul(&q);
        if iteration >= opts.power_iterations {
            let svd = jacobi_svd(&bt, 100);
            let top = &svd.singular_values[..rank];
            let settled = previous.as_ref().is_some_and(|prev| {
                let scale = top[0].max(f64::MIN_POSITIVE);
                prev.iter()
                    .zip(top)
                    .all(|(p, s)| (p - s).abs() <= opts.tolerance * scale)
            });
            // a sketch as wide as min(n, d) already spans range(A)
            if settled || width == max_rank {
                break svd;
            }
            if iteration >= max_iter {
                return Err(BowError::NoConvergence(max_iter));
            }
            previous = Some(top.to_vec());
        }
        let mut z = bt;
        z.orthonormalize();
        q = a.mul(&z);
        q.orthonormalize();
        iteration += 1;
    };
    Ok(assemble(svd.left, &svd.singular_values, rank, d))
}

fn assemble(left: ColMatrix, sigmas: &[f64], rank: usize, dim: usize) -> LsaModel {
    let floor = sigmas[0] * 1e-13;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rank);
    let mut singular_values = Vec::with_capacity(rank);
    let mut cols = left.into_columns();
    for k in 0..rank {
        if sigmas[k] > floor {
            let mut col = core::mem::take(&mut cols[k]);
            // one more orthogonalization pass against the accepted columns
            for b in &basis {
                let p = dot(b, &col);
                axpy(-p, b, &mut col);
            }
            let nrm = norm(&col);
            col.iter_mut().for_each(|x| *x /= nrm);
            basis.push(col);
            singular_values.push(sigmas[k]);
        } else {
            singular_values.push(0.0);
        }
    }
    // directions with zero singular value: complete the basis with
    // canonical vectors so every column stays unit length
    let mut unit = 0;
    while basis.len() < rank {
        let mut col = vec![0.0; dim];
        col[unit] = 1.0;
        unit += 1;
        for _ in 0..2 {
            for b in &basis {
                let p = dot(b, &col);
                axpy(-p, b, &mut col);
            }
        }
        let nrm = norm(&col);
        if nrm > 1e-8 {
            col.iter_mut().for_each(|x| *x /= nrm);
            basis.push(col);
        }
    }
    for col in &mut basis {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let mut projection = vec![0.0; dim * rank];
    for (k, col) in basis.iter().enumerate() {
        for (t, &v) in col.iter().enumerate() {
            projection[t * rank + k] = v;
        }
    }
    LsaModel {
        projection,
        singular_values,
        dim,
        rank,
    }
}

/// `doc^T * V`: the rank-`r` coordinates of a TF-IDF vector.
pub fn lsa_transform(doc: &SparseVector, model: &LsaModel) -> Result<Vec<f64>, BowError> {
    if doc.dim() != model.dim {
        return Err(BowError::DimensionMismatch {
            expected: model.dim,
            actual: doc.dim(),
        });
    }
    let mut out = vec![0.0; model.rank];
    for (t, v) in doc.iter() {
        let row = &model.projection[t as usize * model.rank..(t as usize + 1) * model.rank];
        axpy(v, row, &mut out);
    }
    Ok(out)
}
