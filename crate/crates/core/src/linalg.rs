//! Small dense and sparse linear algebra: Householder QR, one-sided Jacobi
//! SVD, a CSR matrix and randomized truncated SVD built from them.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("requested rank {rank} exceeds matrix dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("Jacobi SVD did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("triplet ({row}, {col}) is outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Thin singular value decomposition `A = U diag(s) V^T`, singular values
/// in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Array1<T>,
    pub v: Array2<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn reconstruct(&self) -> Array2<T> {
        let mut us = self.u.clone();
        for (mut col, &sv) in us.axis_iter_mut(Axis(1)).zip(self.s.iter()) {
            col.mapv_inplace(|x| x * sv);
        }
        us.dot(&self.v.t())
    }

    pub fn truncate(mut self, rank: usize) -> Self {
        let k = rank.min(self.s.len());
        self.u = self.u.slice(s![.., ..k]).to_owned();
        self.v = self.v.slice(s![.., ..k]).to_owned();
        self.s = self.s.slice(s![..k]).to_owned();
        self
    }
}

pub const MAX_JACOBI_SWEEPS: usize = 80;

/// Dense SVD by one-sided (Hestenes) Jacobi rotations.
pub fn jacobi_svd<T: Scalar>(a: ArrayView2<T>) -> Result<Svd<T>, LinalgError> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let (m, n) = a.dim();
    if m < n {
        let t = jacobi_svd(a.t())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }

    // columns of `a` (held as rows of `w`) are rotated until mutually
    // orthogonal; `v` accumulates the rotations, also column-per-row
    let mut w: Vec<Vec<T>> = a.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let tol = T::epsilon() * T::lit(m.max(1) as f64);
    // columns at rounding-noise level relative to the whole matrix stand for
    // zero singular values and are left alone
    let frob2: T = w.iter().flatten().map(|&x| x * x).sum();
    let negligible = frob2 * T::epsilon() * T::epsilon();
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (wp, wq) = pair_mut(&mut w, p, q);
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&x, &y) in wp.iter().zip(wq.iter()) {
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma == T::zero()
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = c * t;
                rotate(wp, wq, c, sn);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, sn);
            }
        }
    }

    let norms: Vec<T> = w
        .iter()
        .map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = Array2::<T>::zeros((m, n));
    let mut vs = Array2::<T>::zeros((n, n));
    let mut s = Array1::<T>::zeros(n);
    let floor = T::min_positive_value().sqrt();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s[dst] = sigma;
        if sigma > floor {
            for i in 0..m {
                u[[i, dst]] = w[src][i] / sigma;
            }
        }
        for i in 0..n {
            vs[[i, dst]] = v[src][i];
        }
    }
    Ok(Svd { u, s, v: vs })
}

fn pair_mut<T>(rows: &mut [Vec<T>], p: usize, q: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(p < q);
    let (lo, hi) = rows.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

fn rotate<T: Scalar>(x: &mut [T], y: &mut [T], c: T, s: T) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Orthonormal basis (m x k) for the column space of `a` (m x k, m >= k),
/// via Householder reflections. Rank-deficient inputs still yield an
/// orthonormal result.
pub fn orthonormalize<T: Scalar>(a: &Array2<T>) -> Array2<T> {
    let (m, k) = a.dim();
    assert!(
        m >= k,
        "orthonormalize needs at least as many rows as columns"
    );
    let mut r = a.clone();
    let mut reflectors: Vec<Array1<T>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = r.slice(s![j.., j]).to_owned();
        let norm = x.iter().map(|&t| t * t).sum::<T>().sqrt();
        let mut vj = x;
        if norm > T::zero() {
            let alpha = if vj[0] >= T::zero() { -norm } else { norm };
            vj[0] = vj[0] - alpha;
            let vn = vj.iter().map(|&t| t * t).sum::<T>().sqrt();
            if vn > T::zero() {
                vj.mapv_inplace(|t| t / vn);
            }
        } else {
            vj.fill(T::zero());
        }
        {
            let mut block = r.slice_mut(s![j.., j..]);
            let proj = vj.dot(&block);
            for (i, &vi) in vj.iter().enumerate() {
                block.row_mut(i).scaled_add(T::lit(-2.0) * vi, &proj);
            }
        }
        reflectors.push(vj);
    }
    let mut q = Array2::<T>::zeros((m, k));
    for j in 0..k {
        q[[j, j]] = T::one();
    }
    for j in (0..k).rev() {
        let vj = &reflectors[j];
        let mut block = q.slice_mut(s![j.., ..]);
        let proj = vj.dot(&block);
        for (i, &vi) in vj.iter().enumerate() {
            block.row_mut(i).scaled_add(T::lit(-2.0) * vi, &proj);
        }
    }
    q
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, LinalgError> {
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite);
            }
            entries.push((r, c, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                let lv = values.last_mut().unwrap();
                *lv = *lv + v;
                continue;
            }
            last = Some((r, c));
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != T::zero() {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut d = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.iter() {
            d[[r, c]] = v;
        }
        d
    }

    /// `self * x` for a dense block `x` (cols x k).
    pub fn mul_dense(&self, x: &Array2<T>) -> Array2<T> {
        let k = x.ncols();
        let mut out = Array2::zeros((self.rows, k));
        for r in 0..self.rows {
            let mut row = out.row_mut(r);
            for idx in self.indptr[r]..self.indptr[r + 1] {
                let v = self.values[idx];
                row.scaled_add(v, &x.row(self.indices[idx]));
            }
        }
        out
    }

    /// `self^T * x` for a dense block `x` (rows x k).
    pub fn tmul_dense(&self, x: &Array2<T>) -> Array2<T> {
        let k = x.ncols();
        let mut out = Array2::zeros((self.cols, k));
        for r in 0..self.rows {
            let xr = x.row(r);
            for idx in self.indptr[r]..self.indptr[r + 1] {
                out.row_mut(self.indices[idx])
                    .scaled_add(self.values[idx], &xr);
            }
        }
        out
    }
}

/// Parameters of the randomized range finder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomizedSvdOptions {
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for RandomizedSvdOptions {
    fn default() -> Self {
        Self {
            oversample: 10,
            power_iterations: 7,
            seed: 0,
        }
    }
}

/// Truncated SVD by seeded randomized subspace iteration. The sketch
/// width is `rank + oversample`, capped at the smaller matrix dimension.
pub fn randomized_svd<T: Scalar>(
    a: &SparseMatrix<T>,
    rank: usize,
    opts: RandomizedSvdOptions,
) -> Result<Svd<T>, LinalgError> {
    let dim = a.rows().min(a.cols());
    if rank == 0 {
        return Err(LinalgError::ZeroRank);
    }
    if rank > dim {
        return Err(LinalgError::RankTooLarge { rank, dim });
    }
    let width = (rank + opts.oversample).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = Array2::from_shape_simple_fn((a.cols(), width), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::lit(z)
    });

    let mut q = orthonormalize(&a.mul_dense(&omega));
    for _ in 0..opts.power_iterations {
        let z = orthonormalize(&a.tmul_dense(&q));
        q = orthonormalize(&a.mul_dense(&z));
    }
    // B = Q^T A, computed as (A^T Q)^T
    let b = a.tmul_dense(&q).reversed_axes();
    let small = jacobi_svd(b.view())?;
    let u = q.dot(&small.u);
    Ok(Svd {
        u,
        s: small.s,
        v: small.v,
    }
    .truncate(rank))
}
