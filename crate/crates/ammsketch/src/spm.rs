//! Randomized range finder for the implicit buffer product `M = X'^T Y'`,
//! plus the balancing split that factors `Z Z^T M` into a row pair sharing
//! singular values. `M` is only ever applied through the two sparse-dense
//! kernels; it is never materialized.

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_columns, thin_svd, DenseMatrix};
use crate::rng;
use crate::sparse::SparseMatrix;

/// Settings for [`subspace_power_method`].
#[derive(Debug, Clone, Copy)]
pub struct SpmConfig {
    /// Number of Gaussian probe columns (the rank budget).
    pub target_rank: usize,
    /// Rounds of `M M^T` applied after the initial `M G`.
    pub power_iterations: usize,
    pub seed: u64,
    /// Re-orthonormalize after every half-step. Powering the product
    /// directly can be ill-conditioned; the basis is span-equivalent in
    /// exact arithmetic. On by default.
    pub reorthonormalize: bool,
}

impl SpmConfig {
    pub fn new(target_rank: usize, power_iterations: usize, seed: u64) -> Result<Self> {
        if target_rank == 0 || power_iterations == 0 {
            return Err(Error::Parameter(format!(
                "SpmConfig needs target_rank >= 1 and power_iterations >= 1, \
                 got {target_rank} and {power_iterations}"
            )));
        }
        Ok(SpmConfig {
            target_rank,
            power_iterations,
            seed,
            reorthonormalize: true,
        })
    }

    pub fn without_reorthonormalization(mut self) -> Self {
        self.reorthonormalize = false;
        self
    }
}

fn apply_m(x_buf: &SparseMatrix, y_buf: &SparseMatrix, g: &DenseMatrix) -> Result<DenseMatrix> {
    x_buf.mul_transpose_dense(&y_buf.mul_dense(g)?)
}

fn apply_mt(x_buf: &SparseMatrix, y_buf: &SparseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    y_buf.mul_transpose_dense(&x_buf.mul_dense(h)?)
}

/// Orthonormal basis `Z` (dx x m') of the power-iterated range
/// `(M M^T)^q M G`, where `G` is a seeded standard-normal dy x m probe.
/// Rank-deficient iterates yield fewer columns; empty buffers yield zero
/// columns.
pub fn subspace_power_method(
    x_buf: &SparseMatrix,
    y_buf: &SparseMatrix,
    cfg: &SpmConfig,
) -> Result<DenseMatrix> {
    if x_buf.rows() != y_buf.rows() {
        return Err(Error::Alignment {
            x_rows: x_buf.rows(),
            y_rows: y_buf.rows(),
        });
    }
    let dx = x_buf.cols();
    let dy = y_buf.cols();
    if x_buf.rows() == 0 {
        return Ok(DenseMatrix::zeros(dx, 0));
    }

    let g = rng::gaussian_matrix(dy, cfg.target_rank, cfg.seed);
    let mut k = apply_m(x_buf, y_buf, &g)?;
    if cfg.reorthonormalize {
        k = orthonormal_columns(&k)?;
    }
    for _ in 0..cfg.power_iterations {
        if k.cols() == 0 {
            break;
        }
        let mut h = apply_mt(x_buf, y_buf, &k)?;
        if cfg.reorthonormalize {
            h = orthonormal_columns(&h)?;
        }
        k = apply_m(x_buf, y_buf, &h)?;
        if cfg.reorthonormalize {
            k = orthonormal_columns(&k)?;
        }
    }
    if cfg.reorthonormalize {
        Ok(k)
    } else {
        orthonormal_columns(&k)
    }
}

/// The compressed row pair produced by [`balance_split`]: both factors carry
/// the same singular values (the square roots of those of their product).
#[derive(Debug, Clone)]
pub struct BalancedPair {
    /// m'' x dx.
    pub x_tilde: DenseMatrix,
    /// m'' x dy.
    pub y_tilde: DenseMatrix,
}

/// Factors `Z Z^T X'^T Y'` as `x_tilde^T y_tilde` without forming
/// `X'^T Y'`: SVD the small matrix `W = Z^T X'^T Y'`, then
/// `x_tilde = S^{1/2} U^T Z^T` and `y_tilde = S^{1/2} V^T`.
pub fn balance_split(
    z: &DenseMatrix,
    x_buf: &SparseMatrix,
    y_buf: &SparseMatrix,
) -> Result<BalancedPair> {
    if x_buf.rows() != y_buf.rows() {
        return Err(Error::Alignment {
            x_rows: x_buf.rows(),
            y_rows: y_buf.rows(),
        });
    }
    if z.rows() != x_buf.cols() {
        return Err(Error::Dimension {
            context: "balance_split: z rows must equal x_buf cols",
            expected: x_buf.cols(),
            found: z.rows(),
        });
    }
    let dx = x_buf.cols();
    let dy = y_buf.cols();

    // W^T = Y'^T (X' Z), dy x m'.
    let xz = x_buf.mul_dense(z)?;
    let wt = y_buf.mul_transpose_dense(&xz)?;
    let svd = thin_svd(&wt.transpose())?;
    let r = svd.rank();

    // x_tilde rows: sqrt(sigma_i) * (Z u_i)^T.
    let zu = z.matmul(&svd.u)?;
    let mut x_tilde = DenseMatrix::zeros(r, dx);
    let mut y_tilde = DenseMatrix::zeros(r, dy);
    for i in 0..r {
        let s = svd.singular_values[i].sqrt();
        let xr = x_tilde.row_mut(i);
        for j in 0..dx {
            xr[j] = s * zu.get(j, i);
        }
        let yr = y_tilde.row_mut(i);
        for j in 0..dy {
            yr[j] = s * svd.v.get(j, i);
        }
    }
    Ok(BalancedPair { x_tilde, y_tilde })
}
