//! Minimal dense linear algebra: row-major matrices, matrix-vector
//! products (full and column-restricted), spectral norm estimation by
//! power iteration, and Gram-Schmidt row orthonormalization.

use crate::error::{Error, Result};
use crate::grouping::{GroupPartition, GroupSet};

/// Default relative tolerance for [`spectral_norm_sq`].
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Default iteration cap for [`spectral_norm_sq`].
pub const SPECTRAL_MAX_ITER: usize = 1000;

/// Dense real matrix in row-major order.
///
/// `cols == 0` is permitted so that an empty column selection has a value;
/// matrices read from files or produced by generators always have at least
/// one column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, validating shape and
    /// finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidArgument(
                "matrix needs at least one row".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "entry count {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at ({}, {})",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// `A v`.
pub fn matvec(a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "matvec: vector length {} vs {} columns",
            v.len(),
            a.cols()
        )));
    }
    Ok((0..a.rows()).map(|i| dot(a.row(i), v)).collect())
}

/// `Aᵀ v`.
pub fn matvec_transpose(a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matvec_transpose: vector length {} vs {} rows",
            v.len(),
            a.rows()
        )));
    }
    let mut out = vec![0.0; a.cols()];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(a.row(i)) {
            *o += vi * aij;
        }
    }
    Ok(out)
}

/// Submatrix of the columns covered by `active` groups, in original order.
/// An empty selection yields an `m x 0` matrix.
pub fn select_group_columns(
    a: &DenseMatrix,
    part: &GroupPartition,
    active: &GroupSet,
) -> Result<DenseMatrix> {
    check_partition(a, part, active)?;
    let width: usize = active.iter().map(|g| part.size(g)).sum();
    let mut data = Vec::with_capacity(a.rows() * width);
    for i in 0..a.rows() {
        let row = a.row(i);
        for g in active.iter() {
            data.extend_from_slice(&row[part.range(g)]);
        }
    }
    Ok(DenseMatrix {
        rows: a.rows(),
        cols: width,
        data,
    })
}

/// `B v` where `B` is the column submatrix of the active groups and `v` is
/// given in the reduced coordinates (concatenated active groups).
pub fn matvec_group_cols(
    a: &DenseMatrix,
    part: &GroupPartition,
    active: &GroupSet,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_partition(a, part, active)?;
    let width: usize = active.iter().map(|g| part.size(g)).sum();
    if v.len() != width {
        return Err(Error::DimensionMismatch(format!(
            "reduced vector length {} vs active width {width}",
            v.len()
        )));
    }
    let mut out = vec![0.0; a.rows()];
    for (i, o) in out.iter_mut().enumerate() {
        let row = a.row(i);
        let mut slot = 0usize;
        let mut acc = 0.0;
        for g in active.iter() {
            let r = part.range(g);
            acc += dot(&row[r.clone()], &v[slot..slot + r.len()]);
            slot += r.len();
        }
        *o = acc;
    }
    Ok(out)
}

/// `Bᵀ u` in reduced coordinates, with `B` as in [`matvec_group_cols`].
pub fn matvec_transpose_group_cols(
    a: &DenseMatrix,
    part: &GroupPartition,
    active: &GroupSet,
    u: &[f64],
) -> Result<Vec<f64>> {
    check_partition(a, part, active)?;
    if u.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs {} rows",
            u.len(),
            a.rows()
        )));
    }
    let width: usize = active.iter().map(|g| part.size(g)).sum();
    let mut out = vec![0.0; width];
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let row = a.row(i);
        let mut slot = 0usize;
        for g in active.iter() {
            let r = part.range(g);
            for (o, &aij) in out[slot..slot + r.len()].iter_mut().zip(&row[r.clone()]) {
                *o += ui * aij;
            }
            slot += r.len();
        }
    }
    Ok(out)
}

fn check_partition(a: &DenseMatrix, part: &GroupPartition, active: &GroupSet) -> Result<()> {
    if part.total_len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "partition length {} vs {} columns",
            part.total_len(),
            a.cols()
        )));
    }
    if let Some(g) = active.iter().find(|&g| g >= part.num_groups()) {
        return Err(Error::InvalidArgument(format!(
            "active group {g} out of range ({} groups)",
            part.num_groups()
        )));
    }
    Ok(())
}

/// Outcome of power iteration on `AᵀA`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    /// Estimated largest eigenvalue of `AᵀA` (squared spectral norm of `A`).
    pub value: f64,
    /// Whether successive Rayleigh quotients met the relative tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates the squared spectral norm of `A` by power iteration on `AᵀA`
/// from a fixed all-ones start. Non-convergence within `max_iter` returns
/// the best estimate with `converged == false`.
pub fn spectral_norm_sq(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if a.data().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(
            "spectral norm of the zero matrix is undefined here; need a nonzero matrix".into(),
        ));
    }
    let n = a.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    // All-ones can land in the null space; fall back to a deterministic ramp.
    if norm2(&matvec(a, &v)?) == 0.0 {
        v = (1..=n).map(|i| i as f64).collect();
        let s = norm2(&v);
        v.iter_mut().for_each(|x| *x /= s);
        if norm2(&matvec(a, &v)?) == 0.0 {
            return Err(Error::Numeric(
                "power iteration start vectors lie in the null space".into(),
            ));
        }
    }
    let mut lambda = 0.0f64;
    for k in 1..=max_iter {
        let u = matvec(a, &v)?;
        let next = dot(&u, &u);
        let w = matvec_transpose(a, &u)?;
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(SpectralEstimate {
                value: next,
                converged: true,
                iterations: k,
            });
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if k > 1 && (next - lambda).abs() <= tol * next.max(f64::MIN_POSITIVE) {
            return Ok(SpectralEstimate {
                value: next,
                converged: true,
                iterations: k,
            });
        }
        lambda = next;
    }
    Ok(SpectralEstimate {
        value: lambda,
        converged: false,
        iterations: max_iter,
    })
}

/// [`spectral_norm_sq`] with the default tolerance and iteration cap.
pub fn spectral_norm_sq_default(a: &DenseMatrix) -> Result<SpectralEstimate> {
    spectral_norm_sq(a, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

/// Replaces the rows of `b` with an orthonormal basis of their span
/// (modified Gram-Schmidt with one reorthogonalization pass). Requires
/// full row rank and at most as many rows as columns.
pub fn orthonormalize_rows(b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() > b.cols() {
        return Err(Error::InvalidArgument(format!(
            "cannot orthonormalize {} rows in dimension {}",
            b.rows(),
            b.cols()
        )));
    }
    const RANK_REL_TOL: f64 = 1e-10;
    let mut q = b.clone();
    for i in 0..q.rows() {
        let original_norm = norm2(q.row(i));
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = q.data.split_at_mut(i * q.cols);
                let qj = &head[j * q.cols..(j + 1) * q.cols];
                let qi = &mut tail[..q.cols];
                let r = dot(qi, qj);
                for (x, &y) in qi.iter_mut().zip(qj) {
                    *x -= r * y;
                }
            }
        }
        let remaining = norm2(q.row(i));
        if remaining <= RANK_REL_TOL * original_norm || remaining == 0.0 {
            return Err(Error::RankDeficient { row: i });
        }
        let inv = 1.0 / remaining;
        q.row_mut(i).iter_mut().for_each(|x| *x *= inv);
    }
    Ok(q)
}

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    norm_p(v, 2.0)
}

/// p-norm with max-factoring to avoid overflow; the norm of the empty or
/// zero vector is 0 by definition.
pub fn norm_p(v: &[f64], p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        let s: f64 = v
            .iter()
            .map(|x| {
                let t = x / m;
                t * t
            })
            .sum();
        return m * s.sqrt();
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Max norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Entrywise max magnitude of `A Aᵀ - I`; small values certify orthonormal rows.
pub fn row_gram_residual(a: &DenseMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.rows() {
        for j in i..a.rows() {
            let g = dot(a.row(i), a.row(j));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}
