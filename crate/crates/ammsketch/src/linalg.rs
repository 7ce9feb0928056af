//! Dense kernel layer: row-major matrices, thin SVD/QR, orthonormal bases,
//! singular-value shrinking, Ky Fan norms and a power-iteration spectral norm
//! for implicit operators.
//!
//! Factorizations are delegated to nalgebra; everything above them (rank
//! truncation, shrinking, norms, power iteration) is implemented here.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative threshold below which singular values are treated as zero,
/// i.e. sigma_i < RANK_RTOL * sigma_max is dropped from the condensed SVD.
pub const RANK_RTOL: f64 = 1e-12;

/// Default stopping tolerance for [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-7;

/// Default iteration cap for [`spectral_norm`].
pub const SPECTRAL_MAX_ITER: usize = 1000;

/// Dense row-major matrix of `f64`. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "DenseMatrix::from_vec",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix::from_vec"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::Dimension {
                    context: "DenseMatrix::from_rows",
                    expected: ncols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(nrows, ncols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`; i-k-j loop order keeps accesses row-major.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                context: "DenseMatrix::matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T` as row-by-row dot products.
    pub fn matmul_bt(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension {
                context: "DenseMatrix::matmul_bt",
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a_row, other.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * other` accumulated one shared row at a time.
    pub fn matmul_at(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension {
                context: "DenseMatrix::matmul_at",
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for t in 0..self.rows {
            let a_row = self.row(t);
            let b_row = other.row(t);
            for (j, &a_tj) in a_row.iter().enumerate() {
                if a_tj == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[j * other.cols..(j + 1) * other.cols];
                for (o, &b_tl) in out_row.iter_mut().zip(b_row) {
                    *o += a_tj * b_tl;
                }
            }
        }
        Ok(out)
    }

    pub fn add_scaled(&self, other: &DenseMatrix, factor: f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension {
                context: "DenseMatrix::add_scaled",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension {
                context: "DenseMatrix::vstack",
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(DenseMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Copies columns `lo..hi` into a new matrix.
    pub fn columns(&self, lo: usize, hi: usize) -> DenseMatrix {
        assert!(lo <= hi && hi <= self.cols, "column range out of bounds");
        let mut out = DenseMatrix::zeros(self.rows, hi - lo);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[lo..hi]);
        }
        out
    }

    /// Copies rows `lo..hi` into a new matrix.
    pub fn row_block(&self, lo: usize, hi: usize) -> DenseMatrix {
        assert!(lo <= hi && hi <= self.rows, "row range out of bounds");
        DenseMatrix {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = m[(i, j)];
            }
        }
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Condensed SVD: `u * diag(singular_values) * v^T` reconstructs the input;
/// values below `RANK_RTOL * sigma_max` are dropped, so the factor width is
/// the numerical rank.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// p x r, orthonormal columns.
    pub u: DenseMatrix,
    /// Strictly positive, nonincreasing.
    pub singular_values: Vec<f64>,
    /// q x r, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `sigma_i` with 1-based `i`; zero past the numerical rank.
    pub fn sigma(&self, i: usize) -> f64 {
        assert!(i >= 1, "singular value index is 1-based");
        self.singular_values.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let p = self.u.rows();
        let q = self.v.rows();
        let mut out = DenseMatrix::zeros(p, q);
        for (k, &s) in self.singular_values.iter().enumerate() {
            for i in 0..p {
                let us = self.u.get(i, k) * s;
                let out_row = out.row_mut(i);
                for j in 0..q {
                    out_row[j] += us * self.v.get(j, k);
                }
            }
        }
        out
    }
}

/// Condensed singular value decomposition of a dense matrix.
///
/// Computed by cyclic one-sided Jacobi rotations, which deliver high
/// relative accuracy on the small values the shrink thresholds depend on.
pub fn thin_svd(m: &DenseMatrix) -> Result<SvdResult> {
    let (p, q) = (m.rows(), m.cols());
    if p == 0 || q == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(p, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(q, 0),
        });
    }
    if p < q {
        // Work on the transpose and swap the factors back.
        let svd = thin_svd(&m.transpose())?;
        return Ok(SvdResult {
            u: svd.v,
            singular_values: svd.singular_values,
            v: svd.u,
        });
    }
    jacobi_svd_tall(m)
}

/// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalize the
/// columns of a working copy by plane rotations, accumulating them in `v`.
/// Column norms are the singular values; normalized columns are `u`.
fn jacobi_svd_tall(m: &DenseMatrix) -> Result<SvdResult> {
    const MAX_SWEEPS: usize = 60;
    let p = m.rows();
    let q = m.cols();

    // Column-major working copy for contiguous column rotations.
    let mut w: Vec<Vec<f64>> = (0..q)
        .map(|j| (0..p).map(|i| m.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut col = vec![0.0; q];
            col[j] = 1.0;
            col
        })
        .collect();
    let mut norms2: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();

    let total2: f64 = norms2.iter().sum();
    if total2 == 0.0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(p, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(q, 0),
        });
    }
    let orth_tol = 1e-15;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        // Exact norms each sweep: the rotation updates cancel catastrophically
        // on merged-away columns, and a stale overestimate would keep dead
        // columns in play forever.
        for (n2, col) in norms2.iter_mut().zip(&w) {
            *n2 = dot(col, col);
        }
        // Columns this far below the truncation threshold cannot influence
        // any kept value; excluding them also keeps degenerate near-zero
        // pairs from cycling forever.
        let max_norm2 = norms2.iter().copied().fold(0.0, f64::max);
        let skip2 = max_norm2 * 1e-28;
        let mut rotated = false;
        for i in 0..q {
            for j in (i + 1)..q {
                let a = norms2[i];
                let b = norms2[j];
                if a <= skip2 || b <= skip2 {
                    continue;
                }
                let c = dot(&w[i], &w[j]);
                if c.abs() <= orth_tol * (a * b).sqrt() {
                    continue;
                }
                // Rotation angle zeroing the (i, j) Gram entry.
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                if !t.is_finite() {
                    continue;
                }
                rotated = true;
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (wi, wj) = pair_mut(&mut w, i, j);
                rotate(wi, wj, cs, sn);
                let (vi, vj) = pair_mut(&mut v, i, j);
                rotate(vi, vj, cs, sn);
                norms2[i] = (a - t * c).max(0.0);
                norms2[j] = (b + t * c).max(0.0);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Kernel {
            op: "jacobi svd",
            rows: p,
            cols: q,
        });
    }

    // Exact norms after the final sweep, then sort and truncate.
    for (j, col) in w.iter().enumerate() {
        norms2[j] = dot(col, col);
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| norms2[b].partial_cmp(&norms2[a]).expect("finite norms"));
    let sigma_max = norms2[order[0]].sqrt();
    let cutoff = RANK_RTOL * sigma_max;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| norms2[j].sqrt() > cutoff && norms2[j] > 0.0)
        .collect();

    let r = kept.len();
    let mut u = DenseMatrix::zeros(p, r);
    let mut v_out = DenseMatrix::zeros(q, r);
    let mut singular_values = Vec::with_capacity(r);
    for (col, &idx) in kept.iter().enumerate() {
        let sigma = norms2[idx].sqrt();
        singular_values.push(sigma);
        for i in 0..p {
            u.set(i, col, w[idx][i] / sigma);
        }
        for j in 0..q {
            v_out.set(j, col, v[idx][j]);
        }
    }
    Ok(SvdResult {
        u,
        singular_values,
        v: v_out,
    })
}

fn pair_mut<T>(cols: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (head, tail) = cols.split_at_mut(j);
    (&mut head[i], &mut tail[0])
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], cs: f64, sn: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = cs * a - sn * b;
        *yi = sn * a + cs * b;
    }
}

/// Singular values only (descending, truncated at numerical rank).
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(thin_svd(m)?.singular_values)
}

/// Thin QR of a tall (rows >= cols) matrix: `q` has orthonormal columns,
/// `r` is square upper-triangular and `q * r` reconstructs the input.
pub fn thin_qr(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if m.rows() < m.cols() {
        return Err(Error::Dimension {
            context: "thin_qr requires rows >= cols",
            expected: m.cols(),
            found: m.rows(),
        });
    }
    qr_economy(m)
}

/// Economy QR for any shape: `q` is rows x s, `r` is s x cols with
/// s = min(rows, cols). Used by the sketchers, whose factor transposes can
/// be wide when the column budget exceeds the data dimension.
pub(crate) fn qr_economy(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (rows, cols) = (m.rows(), m.cols());
    let s = rows.min(cols);
    if rows == 0 || cols == 0 {
        return Ok((DenseMatrix::zeros(rows, s), DenseMatrix::zeros(s, cols)));
    }
    let qr = nalgebra::linalg::QR::new(m.to_na());
    let (q_na, r_na) = (qr.q(), qr.r());
    Ok((DenseMatrix::from_na(&q_na), DenseMatrix::from_na(&r_na)))
}

/// Orthonormal basis of the column span, via rank-revealing column-pivoted
/// QR. Rank-deficient input yields fewer columns; no padding.
pub fn orthonormal_columns(k: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = (k.rows(), k.cols());
    if rows == 0 || cols == 0 {
        return Ok(DenseMatrix::zeros(rows, 0));
    }
    let qr = nalgebra::linalg::ColPivQR::new(k.to_na());
    let (q_na, r_na, _p) = qr.unpack();
    let s = rows.min(cols);
    let head = r_na[(0, 0)].abs();
    if head == 0.0 {
        return Ok(DenseMatrix::zeros(rows, 0));
    }
    let cutoff = RANK_RTOL * head;
    let mut rank = 0;
    for i in 0..s {
        if r_na[(i, i)].abs() > cutoff {
            rank = i + 1;
        } else {
            break;
        }
    }
    let mut out = DenseMatrix::zeros(rows, rank);
    for j in 0..rank {
        for i in 0..rows {
            out.set(i, j, q_na[(i, j)]);
        }
    }
    Ok(out)
}

/// A linear map together with its adjoint, for matrix-free norm estimation.
pub trait LinearOperator {
    /// Dimension of the input space.
    fn domain_dim(&self) -> usize;
    /// Dimension of the output space.
    fn range_dim(&self) -> usize;
    /// `out = A v` with `v` of length `domain_dim`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
    /// `out = A^T v` with `v` of length `range_dim`.
    fn apply_adjoint(&self, v: &[f64], out: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn domain_dim(&self) -> usize {
        self.cols()
    }

    fn range_dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.rows() {
            out[i] = dot(self.row(i), v);
        }
    }

    fn apply_adjoint(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.rows() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
    }
}

/// Outcome of the power iteration in [`spectral_norm`].
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    /// Estimated top singular value.
    pub value: f64,
    /// False when the iteration cap was reached before the tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates the top singular value of an implicit operator by power
/// iteration on the Gram map `v -> A^T A v`, deterministic for a given seed.
pub fn spectral_norm(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if tol <= 0.0 {
        return Err(Error::Parameter(format!(
            "spectral_norm tol must be positive, got {tol}"
        )));
    }
    let d2 = op.domain_dim();
    let d1 = op.range_dim();
    if d1 == 0 || d2 == 0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut v = crate::rng::gaussian_vector(d2, seed);
    normalize(&mut v);
    let mut u = vec![0.0; d1];
    let mut w = vec![0.0; d2];
    let mut sigma = 0.0;

    for it in 1..=max_iter {
        op.apply(&v, &mut u);
        let sigma_new = norm2(&u);
        if sigma_new == 0.0 {
            // v is in the null space; for a zero operator (or an unlucky
            // start) report zero rather than iterating in place.
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        op.apply_adjoint(&u, &mut w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(SpectralEstimate {
                value: sigma_new,
                converged: true,
                iterations: it,
            });
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if (sigma_new - sigma).abs() <= tol * sigma_new {
            return Ok(SpectralEstimate {
                value: sigma_new,
                converged: true,
                iterations: it,
            });
        }
        sigma = sigma_new;
    }
    Ok(SpectralEstimate {
        value: sigma,
        converged: false,
        iterations: max_iter,
    })
}

/// Spectral norm of a dense matrix with the default power-iteration settings.
pub fn spectral_norm_dense(m: &DenseMatrix) -> Result<f64> {
    Ok(spectral_norm(m, SPECTRAL_TOL, SPECTRAL_MAX_ITER, 0x5eed)?.value)
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Ky Fan k-norm: sum of the top `min(k, rank)` singular values. `k` past
/// the rank saturates to the nuclear norm; `k = 0` is 0.
pub fn ky_fan_norm(m: &DenseMatrix, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let sv = singular_values(m)?;
    Ok(sv.iter().take(k).sum())
}

/// Nuclear norm (sum of all singular values).
pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    let sv = singular_values(m)?;
    Ok(sv.iter().sum())
}

/// Elementwise `max(sigma_i - delta, 0)` on a nonincreasing vector.
pub fn shrink_values(sigma: &[f64], delta: f64) -> Vec<f64> {
    debug_assert!(delta >= 0.0, "shrink delta must be nonnegative");
    sigma.iter().map(|&s| (s - delta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> DenseMatrix {
        DenseMatrix::from_vec(rows, cols, entries.to_vec()).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        crate::rng::gaussian_matrix(rows, cols, seed)
    }

    fn frob_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.add_scaled(b, -1.0).unwrap().frobenius_norm()
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn svd_of_diagonal() {
        let m = mat(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let svd = thin_svd(&m).unwrap();
        assert_eq!(svd.rank(), 2);
        assert_abs_diff_eq!(svd.singular_values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(svd.singular_values[1], 1.0, epsilon = 1e-12);
        // Columns of u/v are +-e1, +-e2.
        for k in 0..2 {
            assert_abs_diff_eq!(svd.u.get(k, k).abs(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(svd.v.get(k, k).abs(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn svd_of_zero_matrix_has_rank_zero() {
        let svd = thin_svd(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(svd.rank(), 0);
        assert_eq!(svd.u.cols(), 0);
        assert_eq!(svd.v.cols(), 0);
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        let m = random_matrix(6, 4, 11);
        let svd = thin_svd(&m).unwrap();
        let err = frob_diff(&svd.reconstruct(), &m);
        assert!(err < 1e-9 * (1.0 + m.frobenius_norm()));
        // Orthonormality of both factors.
        let utu = svd.u.matmul_at(&svd.u).unwrap();
        let vtv = svd.v.matmul_at(&svd.v).unwrap();
        let id = DenseMatrix::identity(svd.rank());
        assert!(frob_diff(&utu, &id) < 1e-10);
        assert!(frob_diff(&vtv, &id) < 1e-10);
    }

    #[test]
    fn qr_of_identity() {
        let (q, r) = thin_qr(&DenseMatrix::identity(3)).unwrap();
        assert!(frob_diff(&q.matmul(&r).unwrap(), &DenseMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn qr_matches_hand_gram_schmidt() {
        let m = mat(3, 2, &[3.0, 0.0, 4.0, 0.0, 0.0, 0.0]);
        let (q, r) = thin_qr(&m).unwrap();
        // First column is (0.6, 0.8, 0) up to sign; r[0,0] = +-5.
        let s = q.get(0, 0).signum();
        assert_abs_diff_eq!(s * q.get(0, 0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s * q.get(1, 0), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(2, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.get(0, 0).abs(), 5.0, epsilon = 1e-12);
        assert!(frob_diff(&q.matmul(&r).unwrap(), &m) < 1e-9);
    }

    #[test]
    fn qr_rejects_wide_input() {
        assert!(thin_qr(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn qr_reconstructs_random_tall_matrix() {
        let m = random_matrix(8, 3, 7);
        let (q, r) = thin_qr(&m).unwrap();
        assert!(frob_diff(&q.matmul(&r).unwrap(), &m) < 1e-9 * (1.0 + m.frobenius_norm()));
        let qtq = q.matmul_at(&q).unwrap();
        assert!(frob_diff(&qtq, &DenseMatrix::identity(3)) < 1e-10);
        // r upper triangular.
        for i in 1..r.rows() {
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn orthonormal_columns_drops_null_directions() {
        let m = mat(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let q = orthonormal_columns(&m).unwrap();
        assert_eq!(q.cols(), 1);
        assert_abs_diff_eq!(q.get(0, 0).abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(1, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_columns_preserves_span() {
        // Compare projectors against the SVD basis.
        let m = random_matrix(10, 4, 3);
        let q = orthonormal_columns(&m).unwrap();
        assert_eq!(q.cols(), 4);
        let svd = thin_svd(&m).unwrap();
        let pq = q.matmul_bt(&q).unwrap();
        let pu = svd.u.matmul_bt(&svd.u).unwrap();
        assert!(frob_diff(&pq, &pu) < 1e-9);
    }

    #[test]
    fn orthonormal_columns_of_zero_matrix_is_empty() {
        let q = orthonormal_columns(&DenseMatrix::zeros(4, 2)).unwrap();
        assert_eq!(q.cols(), 0);
    }

    #[test]
    fn orthonormal_columns_idempotent_on_orthonormal_input() {
        let q0 = orthonormal_columns(&random_matrix(9, 3, 13)).unwrap();
        let q1 = orthonormal_columns(&q0).unwrap();
        assert_eq!(q1.cols(), q0.cols());
        let qtq = q1.matmul_at(&q1).unwrap();
        assert!(frob_diff(&qtq, &DenseMatrix::identity(3)) < 1e-10);
        let p0 = q0.matmul_bt(&q0).unwrap();
        let p1 = q1.matmul_bt(&q1).unwrap();
        assert!(frob_diff(&p0, &p1) < 1e-10, "span must be preserved");
    }

    #[test]
    fn spectral_norm_flags_unconverged_runs() {
        let m = random_matrix(12, 12, 77);
        let est = spectral_norm(&m, 1e-14, 1, 5).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 1);
        assert!(est.value > 0.0);
        assert!(spectral_norm(&m, 0.0, 10, 5).is_err());
        assert!(spectral_norm(&m, -1.0, 10, 5).is_err());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = mat(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let est = spectral_norm(&m, 1e-9, 1000, 1).unwrap();
        assert!(est.converged);
        assert_abs_diff_eq!(est.value, 3.0, epsilon = 1e-8);
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // u v^T with |u| = 2, |v| = 5 has spectral norm 10.
        let u = [2.0, 0.0, 0.0];
        let v = [3.0, 4.0, 0.0, 0.0];
        let m = DenseMatrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let est = spectral_norm(&m, 1e-9, 1000, 2).unwrap();
        assert_abs_diff_eq!(est.value, 10.0, epsilon = 1e-8);
        assert_abs_diff_eq!(est.value, m.frobenius_norm(), epsilon = 1e-8);
    }

    #[test]
    fn spectral_norm_matches_svd_on_random_matrix() {
        let m = random_matrix(30, 20, 5);
        let sv = singular_values(&m).unwrap();
        let est = spectral_norm(&m, 1e-9, 5000, 17).unwrap();
        assert!((est.value - sv[0]).abs() <= 1e-6 * sv[0]);
    }

    #[test]
    fn spectral_norm_of_zero_operator() {
        let est = spectral_norm(&DenseMatrix::zeros(3, 3), 1e-7, 10, 0).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn ky_fan_of_diagonal() {
        let m = mat(3, 3, &[5.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        assert_abs_diff_eq!(ky_fan_norm(&m, 2).unwrap(), 8.0, epsilon = 1e-10);
        assert_eq!(ky_fan_norm(&m, 0).unwrap(), 0.0);
        // Saturation to the nuclear norm.
        assert_abs_diff_eq!(ky_fan_norm(&m, 10).unwrap(), 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            ky_fan_norm(&m, 3).unwrap(),
            nuclear_norm(&m).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn svd_values_match_gram_eigen_route() {
        // Independent route: sqrt of the symmetric eigenvalues of A^T A.
        // The Gram route loses accuracy below ~sqrt(eps) * sigma_1, so only
        // values above 1e-6 * sigma_1 are compared.
        for (rows, cols, seed) in [(12, 12, 1u64), (40, 9, 2), (9, 40, 3), (25, 25, 4)] {
            let mut m = random_matrix(rows, cols, seed);
            if seed % 2 == 0 {
                // Make it rank deficient: overwrite half the rows with
                // copies of the first.
                let first = m.row(0).to_vec();
                for i in (rows / 2)..rows {
                    m.row_mut(i).copy_from_slice(&first);
                }
            }
            let sv = singular_values(&m).unwrap();
            let gram = m.matmul_at(&m).unwrap();
            let eig = nalgebra::linalg::SymmetricEigen::new(gram.to_na());
            let mut ev: Vec<f64> = eig
                .eigenvalues
                .iter()
                .map(|e| e.max(0.0).sqrt())
                .collect();
            ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let sigma1 = sv[0];
            for (i, &s) in sv.iter().enumerate() {
                if s < 1e-6 * sigma1 {
                    break;
                }
                assert!(
                    (s - ev[i]).abs() <= 1e-8 * sigma1,
                    "({rows}x{cols}, seed {seed}) sigma_{i}: jacobi {s} vs gram {}",
                    ev[i]
                );
            }
        }
    }

    #[test]
    fn svd_recovers_graded_spectrum_with_relative_accuracy() {
        // Build U diag(s) V^T with singular values spanning ten orders of
        // magnitude (all above the rank cutoff) and check each is recovered
        // to high relative accuracy, which is the property the shrink
        // thresholds lean on.
        let p = 20;
        let q = 8;
        let u = orthonormal_columns(&random_matrix(p, q, 31)).unwrap();
        let v = orthonormal_columns(&random_matrix(q, q, 32)).unwrap();
        let spectrum: Vec<f64> = (0..q).map(|i| 10f64.powf(-1.5 * i as f64)).collect();
        let mut scaled = DenseMatrix::zeros(p, q);
        for i in 0..p {
            for j in 0..q {
                scaled.set(i, j, u.get(i, j) * spectrum[j]);
            }
        }
        let m = scaled.matmul_bt(&v).unwrap();
        let sv = singular_values(&m).unwrap();
        assert_eq!(sv.len(), q);
        // Forming m entrywise already perturbs each sigma_i by up to
        // ~eps * sigma_1, so that is the absolute floor of the check.
        for (i, (&got, &want)) in sv.iter().zip(&spectrum).enumerate() {
            assert!(
                (got - want).abs() <= 1e-13 * spectrum[0] + 1e-10 * want,
                "sigma_{i}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn ky_fan_matches_svd_oracle() {
        let m = random_matrix(7, 5, 23);
        let sv = singular_values(&m).unwrap();
        let top3: f64 = sv.iter().take(3).sum();
        assert_abs_diff_eq!(ky_fan_norm(&m, 3).unwrap(), top3, epsilon = 1e-10);
    }

    #[test]
    fn shrink_values_hand_cases() {
        assert_eq!(shrink_values(&[5.0, 3.0, 2.0, 1.0], 3.0), vec![2.0, 0.0, 0.0, 0.0]);
        let sigma = [4.0, 2.0, 1.0];
        assert_eq!(shrink_values(&sigma, 0.0), sigma.to_vec());
        // delta = sigma_m zeroes indices m.. (here m = 2, 1-based).
        let out = shrink_values(&sigma, 2.0);
        assert!(out[1..].iter().all(|&v| v == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn svd_and_qr_reconstruct(rows in 1usize..64, cols in 1usize..64, seed in 0u64..1000) {
            let m = random_matrix(rows, cols, seed);
            let svd = thin_svd(&m).unwrap();
            let rec = svd.reconstruct();
            prop_assert!(frob_diff(&rec, &m) <= 1e-9 * (1.0 + m.frobenius_norm()));
            prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(svd.singular_values.iter().all(|&s| s > 0.0));
            if rows >= cols {
                let (q, r) = thin_qr(&m).unwrap();
                prop_assert!(frob_diff(&q.matmul(&r).unwrap(), &m) <= 1e-9 * (1.0 + m.frobenius_norm()));
                let qtq = q.matmul_at(&q).unwrap();
                prop_assert!(frob_diff(&qtq, &DenseMatrix::identity(cols)) <= 1e-10 * (cols as f64));
            }
        }

        #[test]
        fn spectral_norm_below_frobenius(rows in 1usize..24, cols in 1usize..24, seed in 0u64..1000) {
            let m = random_matrix(rows, cols, seed);
            let est = spectral_norm(&m, 1e-9, 2000, seed ^ 0xabcd).unwrap();
            prop_assert!(est.value <= m.frobenius_norm() * (1.0 + 1e-9));
        }

        #[test]
        fn ky_fan_monotone_and_subadditive(rows in 1usize..16, cols in 1usize..16, seed in 0u64..500) {
            let a = random_matrix(rows, cols, seed);
            let b = random_matrix(rows, cols, seed.wrapping_add(777));
            let sum = a.add_scaled(&b, 1.0).unwrap();
            let kmax = rows.min(cols) + 2;
            let mut prev = 0.0;
            for k in 1..=kmax {
                let nk = ky_fan_norm(&sum, k).unwrap();
                prop_assert!(nk + 1e-12 >= prev);
                prev = nk;
                let na = ky_fan_norm(&a, k).unwrap();
                let nb = ky_fan_norm(&b, k).unwrap();
                prop_assert!(nk <= na + nb + 1e-9 * (1.0 + na + nb));
            }
        }

        #[test]
        fn shrink_dominated_by_input(len in 1usize..12, seed in 0u64..500, delta in 0.0f64..5.0) {
            let mut sigma: Vec<f64> = crate::rng::gaussian_vector(len, seed)
                .into_iter()
                .map(f64::abs)
                .collect();
            sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let out = shrink_values(&sigma, delta);
            for (o, s) in out.iter().zip(&sigma) {
                prop_assert!(o <= s);
            }
            prop_assert!(out.windows(2).all(|w| w[0] >= w[1]));
            // Nonzeros stop at the first sigma_i <= delta.
            let first_small = sigma.iter().position(|&s| s <= delta).unwrap_or(len);
            for &o in &out[first_small.min(len)..] {
                prop_assert!(o == 0.0);
            }
        }
    }
}
