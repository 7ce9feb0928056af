//! Exact desk-scale computations and bound evaluation: ground-truth
//! products, spectral AMM error in dense or implicit (matrix-free) mode,
//! and the right-hand sides of the accuracy guarantees the sketches carry.

use crate::error::{Error, Result};
use crate::linalg::{self, singular_values, spectral_norm, DenseMatrix, LinearOperator};
use crate::scod::FlushRecord;
use crate::sparse::SparseMatrix;

/// Entry cap for materializing dense oracle matrices (products, residuals).
pub const DENSE_GUARD_ENTRIES: usize = 4_000_000;

/// Stopping tolerance for the implicit error operator.
pub const IMPLICIT_TOL: f64 = 1e-6;

const IMPLICIT_MAX_ITER: usize = 5000;
const IMPLICIT_SEED: u64 = 0x00ab5eed;

/// Either storage format, borrowed; oracle entry points accept both.
#[derive(Debug, Clone, Copy)]
pub enum MatRef<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a SparseMatrix),
}

impl<'a> MatRef<'a> {
    pub fn rows(&self) -> usize {
        match self {
            MatRef::Dense(m) => m.rows(),
            MatRef::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatRef::Dense(m) => m.cols(),
            MatRef::Sparse(m) => m.cols(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            MatRef::Dense(m) => m.data().iter().filter(|&&v| v != 0.0).count(),
            MatRef::Sparse(m) => m.nnz(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            MatRef::Dense(m) => m.frobenius_norm(),
            MatRef::Sparse(m) => m.frobenius_norm(),
        }
    }

    /// `self * v`.
    fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        match self {
            MatRef::Dense(m) => m.apply(v, out),
            MatRef::Sparse(m) => {
                out.fill(0.0);
                for i in 0..m.rows() {
                    let mut acc = 0.0;
                    for (j, val) in m.row_entries(i) {
                        acc += val * v[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }

    /// `self^T * v`.
    fn mul_transpose_vec(&self, v: &[f64], out: &mut [f64]) {
        match self {
            MatRef::Dense(m) => m.apply_adjoint(v, out),
            MatRef::Sparse(m) => {
                out.fill(0.0);
                for i in 0..m.rows() {
                    let vi = v[i];
                    if vi == 0.0 {
                        continue;
                    }
                    for (j, val) in m.row_entries(i) {
                        out[j] += vi * val;
                    }
                }
            }
        }
    }

    /// Densified copy, guarded by the oracle entry cap.
    pub fn densify(&self) -> Result<DenseMatrix> {
        guard_entries(self.rows(), self.cols())?;
        Ok(match self {
            MatRef::Dense(m) => (*m).clone(),
            MatRef::Sparse(m) => m.densify(),
        })
    }

    /// Singular values through the dense SVD, guarded.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(&self.densify()?)
    }
}

fn guard_entries(rows: usize, cols: usize) -> Result<()> {
    if rows.saturating_mul(cols) > DENSE_GUARD_ENTRIES {
        return Err(Error::GuardExceeded {
            rows,
            cols,
            limit: DENSE_GUARD_ENTRIES,
        });
    }
    Ok(())
}

/// Exact `X^T Y`, accumulated row pair by row pair. Refuses products past
/// the dense guard.
pub fn exact_product(x: &MatRef, y: &MatRef) -> Result<DenseMatrix> {
    if x.rows() != y.rows() {
        return Err(Error::Alignment {
            x_rows: x.rows(),
            y_rows: y.rows(),
        });
    }
    guard_entries(x.cols(), y.cols())?;
    let (dx, dy) = (x.cols(), y.cols());
    let mut out = DenseMatrix::zeros(dx, dy);
    match (x, y) {
        (MatRef::Sparse(xs), MatRef::Sparse(ys)) => {
            for t in 0..xs.rows() {
                for (i, xv) in xs.row_entries(t) {
                    let row = out.row_mut(i);
                    for (j, yv) in ys.row_entries(t) {
                        row[j] += xv * yv;
                    }
                }
            }
        }
        (MatRef::Sparse(xs), MatRef::Dense(yd)) => {
            for t in 0..xs.rows() {
                let y_row = yd.row(t);
                for (i, xv) in xs.row_entries(t) {
                    let row = out.row_mut(i);
                    for (o, &yv) in row.iter_mut().zip(y_row) {
                        *o += xv * yv;
                    }
                }
            }
        }
        (MatRef::Dense(xd), MatRef::Sparse(ys)) => {
            for t in 0..ys.rows() {
                let x_row = xd.row(t);
                for (j, yv) in ys.row_entries(t) {
                    for i in 0..dx {
                        out.set(i, j, out.get(i, j) + x_row[i] * yv);
                    }
                }
            }
        }
        (MatRef::Dense(xd), MatRef::Dense(yd)) => {
            out = xd.matmul_at(yd)?;
        }
    }
    Ok(out)
}

/// How the spectral AMM error is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Materialize `X^T Y - A^T B` and take its top singular value.
    #[default]
    Dense,
    /// Power iteration on `v -> X^T (Y v) - A^T (B v)`.
    Implicit,
}

struct DiffOperator<'a> {
    x: MatRef<'a>,
    y: MatRef<'a>,
    a: Option<&'a DenseMatrix>,
    b: Option<&'a DenseMatrix>,
    scratch_n: std::cell::RefCell<Vec<f64>>,
    scratch_r: std::cell::RefCell<Vec<f64>>,
    tmp: std::cell::RefCell<Vec<f64>>,
}

impl<'a> DiffOperator<'a> {
    fn new(
        x: MatRef<'a>,
        y: MatRef<'a>,
        a: Option<&'a DenseMatrix>,
        b: Option<&'a DenseMatrix>,
    ) -> Self {
        let sketch_rows = a.map_or(0, |m| m.rows());
        DiffOperator {
            x,
            y,
            a,
            b,
            scratch_n: std::cell::RefCell::new(vec![0.0; x.rows()]),
            scratch_r: std::cell::RefCell::new(vec![0.0; sketch_rows]),
            tmp: std::cell::RefCell::new(Vec::new()),
        }
    }
}

impl LinearOperator for DiffOperator<'_> {
    fn domain_dim(&self) -> usize {
        self.y.cols()
    }

    fn range_dim(&self) -> usize {
        self.x.cols()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        // X^T (Y v)
        let mut n_buf = self.scratch_n.borrow_mut();
        self.y.mul_vec(v, &mut n_buf);
        self.x.mul_transpose_vec(&n_buf, out);
        // minus A^T (B v)
        if let (Some(a), Some(b)) = (self.a, self.b) {
            let mut r_buf = self.scratch_r.borrow_mut();
            b.apply(v, &mut r_buf);
            let mut t = self.tmp.borrow_mut();
            t.resize(out.len(), 0.0);
            a.apply_adjoint(&r_buf, &mut t);
            for (o, d) in out.iter_mut().zip(t.iter()) {
                *o -= d;
            }
        }
    }

    fn apply_adjoint(&self, v: &[f64], out: &mut [f64]) {
        // Y^T (X v)
        let mut n_buf = self.scratch_n.borrow_mut();
        self.x.mul_vec(v, &mut n_buf);
        self.y.mul_transpose_vec(&n_buf, out);
        // minus B^T (A v)
        if let (Some(a), Some(b)) = (self.a, self.b) {
            let mut r_buf = self.scratch_r.borrow_mut();
            a.apply(v, &mut r_buf);
            let mut t = self.tmp.borrow_mut();
            t.resize(out.len(), 0.0);
            b.apply_adjoint(&r_buf, &mut t);
            for (o, d) in out.iter_mut().zip(t.iter()) {
                *o -= d;
            }
        }
    }
}

/// Spectral norm of `X^T Y - A^T B`.
pub fn amm_error(
    x: &MatRef,
    y: &MatRef,
    a: &DenseMatrix,
    b: &DenseMatrix,
    mode: ErrorMode,
) -> Result<f64> {
    if a.cols() != x.cols() || b.cols() != y.cols() || a.rows() != b.rows() {
        return Err(Error::Dimension {
            context: "amm_error factor shapes",
            expected: x.cols(),
            found: a.cols(),
        });
    }
    match mode {
        ErrorMode::Dense => {
            let exact = exact_product(x, y)?;
            let approx = a.matmul_at(b)?;
            let diff = exact.add_scaled(&approx, -1.0)?;
            Ok(singular_values(&diff)?.first().copied().unwrap_or(0.0))
        }
        ErrorMode::Implicit => {
            let op = DiffOperator::new(*x, *y, Some(a), Some(b));
            Ok(spectral_norm(&op, IMPLICIT_TOL, IMPLICIT_MAX_ITER, IMPLICIT_SEED)?.value)
        }
    }
}

/// Spectral norm of the exact product, in the requested mode.
pub fn product_spectral_norm(x: &MatRef, y: &MatRef, mode: ErrorMode) -> Result<f64> {
    match mode {
        ErrorMode::Dense => {
            let exact = exact_product(x, y)?;
            Ok(singular_values(&exact)?.first().copied().unwrap_or(0.0))
        }
        ErrorMode::Implicit => {
            let op = DiffOperator::new(*x, *y, None, None);
            Ok(spectral_norm(&op, IMPLICIT_TOL, IMPLICIT_MAX_ITER, IMPLICIT_SEED)?.value)
        }
    }
}

/// Covariance-sketch bound: `(|X|_F^2 - |X_k|_F^2) / (m - k)`.
pub fn bound_lemma1(x: &MatRef, m: usize, k: usize) -> Result<f64> {
    if k >= m {
        return Err(Error::Parameter(format!(
            "bound_lemma1 needs k < m, got k={k}, m={m}"
        )));
    }
    let frob2 = x.frobenius_norm().powi(2);
    let topk2: f64 = x
        .singular_values()?
        .iter()
        .take(k)
        .map(|s| s * s)
        .sum();
    Ok(((frob2 - topk2) / (m - k) as f64).max(0.0))
}

/// The baseline paired-sketch bound `|X|_F |Y|_F / m`.
pub fn bound_lemma2(x: &MatRef, y: &MatRef, m: usize) -> f64 {
    x.frobenius_norm() * y.frobenius_norm() / m as f64
}

/// Tightened paired-sketch bound
/// `(|X|_F |Y|_F - |X^T Y|_k) / (m - k)`; nonnegative since the nuclear
/// norm of the product never exceeds the Frobenius product.
pub fn bound_theorem1(x: &MatRef, y: &MatRef, m: usize, k: usize) -> Result<f64> {
    if k >= m {
        return Err(Error::Parameter(format!(
            "bound_theorem1 needs k < m, got k={k}, m={m}"
        )));
    }
    let kyfan: f64 = product_singular_values(x, y)?.iter().take(k).sum();
    let frob = x.frobenius_norm() * y.frobenius_norm();
    Ok(((frob - kyfan) / (m - k) as f64).max(0.0))
}

/// RHS of the tightened bound for every k < m, plus its minimum.
pub fn theorem1_rhs_all(x: &MatRef, y: &MatRef, m: usize) -> Result<(Vec<f64>, f64)> {
    let sv = product_singular_values(x, y)?;
    let frob = x.frobenius_norm() * y.frobenius_norm();
    let per_k = theorem1_from_parts(&sv, frob, m);
    let min = per_k.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((per_k, min))
}

fn theorem1_from_parts(product_sv: &[f64], frob: f64, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m);
    let mut kyfan = 0.0;
    for k in 0..m {
        out.push(((frob - kyfan) / (m - k) as f64).max(0.0));
        kyfan += product_sv.get(k).copied().unwrap_or(0.0);
    }
    out
}

/// Sparse-sketch bound
/// `((2 + eps)/(m - k) + (1 + eps) k/(m - k)^2) (|X|_F |Y|_F - |X^T Y|_k)`.
pub fn bound_theorem3(
    x: &MatRef,
    y: &MatRef,
    m: usize,
    k: usize,
    epsilon: f64,
) -> Result<f64> {
    if k >= m {
        return Err(Error::Parameter(format!(
            "bound_theorem3 needs k < m, got k={k}, m={m}"
        )));
    }
    if epsilon < 0.0 {
        return Err(Error::Parameter(format!(
            "bound_theorem3 needs epsilon >= 0, got {epsilon}"
        )));
    }
    let kyfan: f64 = product_singular_values(x, y)?.iter().take(k).sum();
    let frob = x.frobenius_norm() * y.frobenius_norm();
    Ok(theorem3_from_parts(frob, kyfan, m, k, epsilon))
}

fn theorem3_from_parts(frob: f64, kyfan_k: f64, m: usize, k: usize, epsilon: f64) -> f64 {
    let mk = (m - k) as f64;
    let coeff = (2.0 + epsilon) / mk + (1.0 + epsilon) * k as f64 / (mk * mk);
    (coeff * (frob - kyfan_k)).max(0.0)
}

fn product_singular_values(x: &MatRef, y: &MatRef) -> Result<Vec<f64>> {
    singular_values(&exact_product(x, y)?)
}

/// Worst-case realized subspace-compression slack across retained flushes:
/// `max_i |M_i - Z_i Z_i^T M_i| / sigma_{m+1}(M_i) - 1`, clamped at zero.
/// The ratio counts as 1 when `sigma_{m+1}` is negligible (the flush was
/// recovered exactly). Requires retained diagnostics.
pub fn measure_epsilon_hat(flush_log: &[FlushRecord], m: usize) -> Result<f64> {
    let mut worst: f64 = 1.0;
    for rec in flush_log {
        let retained = rec.retained.as_ref().ok_or(Error::RetentionDisabled)?;
        guard_entries(retained.x_buf.cols(), retained.y_buf.cols())?;
        let product = exact_product(
            &MatRef::Sparse(&retained.x_buf),
            &MatRef::Sparse(&retained.y_buf),
        )?;
        let sv = singular_values(&product)?;
        let sigma_1 = sv.first().copied().unwrap_or(0.0);
        let sigma_m1 = sv.get(m).copied().unwrap_or(0.0);
        if sigma_m1 <= linalg::RANK_RTOL * sigma_1 || sigma_m1 == 0.0 {
            continue; // exact-recovery flush: ratio defined as 1
        }
        let z = &retained.z;
        let ztm = z.transpose().matmul(&product)?;
        let residual = product.add_scaled(&z.matmul(&ztm)?, -1.0)?;
        let err = singular_values(&residual)?.first().copied().unwrap_or(0.0);
        worst = worst.max(err / sigma_m1);
    }
    Ok((worst - 1.0).max(0.0))
}

/// Which scale normalizes the reported relative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorDenominator {
    /// `|X|_F |Y|_F`, the scale-free quantity in the baseline bound.
    #[default]
    FrobProduct,
    /// `|X^T Y|_2`.
    ExactSpectral,
}

impl ErrorDenominator {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorDenominator::FrobProduct => "frob_product",
            ErrorDenominator::ExactSpectral => "exact_spectral",
        }
    }
}

/// Report options for [`build_report`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub mode: ErrorMode,
    pub denominator: ErrorDenominator,
    /// Evaluate the bound diagnostics tied to the plain paired sketch
    /// (shrink-mass and nuclear-norm checks). Only meaningful for `cod`.
    pub cod_diagnostics: bool,
}

/// Wall-clock milliseconds per run phase. `build_report` fills the oracle
/// phase; callers that own ingestion and sketching fill the rest.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimes {
    pub ingest_ms: f64,
    pub sketch_ms: f64,
    pub oracle_ms: f64,
}

impl PhaseTimes {
    pub fn total_ms(&self) -> f64 {
        self.ingest_ms + self.sketch_ms + self.oracle_ms
    }
}

/// Everything the harness records about one run.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub exact_spectral_error: f64,
    pub relative_error: f64,
    pub rel_error_denominator: ErrorDenominator,
    pub denominator_value: f64,
    pub lemma2_rhs: f64,
    /// Tightened-bound RHS for k = 0..m-1; absent when the dense guard
    /// blocked the product decomposition.
    pub theorem1_rhs_per_k: Option<Vec<f64>>,
    pub theorem1_rhs_min: Option<f64>,
    /// Accumulated shrink mass reported by the sketch.
    pub lemma3_delta: f64,
    /// Error bounded by the shrink mass (paired-sketch diagnostic).
    pub lemma3_check_i: Option<bool>,
    /// Nuclear norm of the estimate bounded by the Frobenius budget minus
    /// m times the shrink mass.
    pub lemma3_check_ii: Option<bool>,
    /// Nuclear-gap inequality for every k < m.
    pub lemma4_check: Option<bool>,
    pub measured_epsilon_hat: Option<f64>,
    pub wall_time_ms: PhaseTimes,
    /// Ingredients for evaluating the sparse-sketch bound at any (k, eps).
    frob_product: f64,
    product_sv: Option<Vec<f64>>,
    m: usize,
}

impl BoundReport {
    /// Sparse-sketch bound RHS at (k, epsilon); `None` when the product
    /// spectrum was unavailable (guard) or k >= m.
    pub fn theorem3_rhs(&self, k: usize, epsilon: f64) -> Option<f64> {
        if k >= self.m {
            return None;
        }
        let sv = self.product_sv.as_ref()?;
        let kyfan: f64 = sv.iter().take(k).sum();
        Some(theorem3_from_parts(self.frob_product, kyfan, self.m, k, epsilon))
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Numerical slack for inequality checks: both sides carry O(1e-13)
/// relative error from the dense decompositions.
fn holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + 1e-9 * (1.0 + scale.abs())
}

/// Evaluates a finished sketch against the exact product and the bound
/// family. `epsilon_hat` is measured from the output's retained flush log
/// when present.
pub fn build_report(
    x: &MatRef,
    y: &MatRef,
    output: &crate::registry::SketchOutput,
    m: usize,
    opts: &ReportOptions,
) -> Result<BoundReport> {
    let started = std::time::Instant::now();
    let frob_product = x.frobenius_norm() * y.frobenius_norm();
    let lemma2_rhs = bound_lemma2(x, y, m);

    let exact_spectral_error = amm_error(x, y, &output.a, &output.b, opts.mode)?;

    let product_sv = match opts.mode {
        ErrorMode::Dense => Some(product_singular_values(x, y)?),
        ErrorMode::Implicit => match product_singular_values(x, y) {
            Ok(sv) => Some(sv),
            Err(Error::GuardExceeded { .. }) => None,
            Err(e) => return Err(e),
        },
    };

    let (theorem1_rhs_per_k, theorem1_rhs_min) = match &product_sv {
        Some(sv) => {
            let per_k = theorem1_from_parts(sv, frob_product, m);
            let min = per_k.iter().copied().fold(f64::INFINITY, f64::min);
            (Some(per_k), Some(min))
        }
        None => (None, None),
    };

    let denominator_value = match opts.denominator {
        ErrorDenominator::FrobProduct => frob_product,
        ErrorDenominator::ExactSpectral => match &product_sv {
            Some(sv) => sv.first().copied().unwrap_or(0.0),
            None => product_spectral_norm(x, y, ErrorMode::Implicit)?,
        },
    };
    let relative_error = if denominator_value > 0.0 {
        exact_spectral_error / denominator_value
    } else {
        0.0
    };

    let delta = output.delta_sum;
    let (lemma3_check_i, lemma3_check_ii, lemma4_check) = if opts.cod_diagnostics {
        let approx = output.product();
        let approx_nuclear: f64 = singular_values(&approx)?.iter().sum();
        let check_i = holds(exact_spectral_error, delta, frob_product);
        let check_ii = holds(
            approx_nuclear,
            frob_product - m as f64 * delta,
            frob_product,
        );
        let check_iv = match &product_sv {
            Some(sv) => {
                let exact_nuclear: f64 = sv.iter().sum();
                let gap = exact_nuclear - approx_nuclear;
                let mut ok = true;
                let mut tail = exact_nuclear;
                for k in 0..m {
                    // tail = sum_{i > k} sigma_i(X^T Y)
                    ok &= holds(gap, tail + k as f64 * delta, exact_nuclear);
                    tail -= sv.get(k).copied().unwrap_or(0.0);
                }
                Some(ok)
            }
            None => None,
        };
        (Some(check_i), Some(check_ii), check_iv)
    } else {
        (None, None, None)
    };

    let measured_epsilon_hat = match &output.flush_log {
        Some(log) if log.iter().all(|r| r.retained.is_some()) => {
            Some(measure_epsilon_hat(log, m)?)
        }
        _ => None,
    };

    Ok(BoundReport {
        exact_spectral_error,
        relative_error,
        rel_error_denominator: opts.denominator,
        denominator_value,
        lemma2_rhs,
        theorem1_rhs_per_k,
        theorem1_rhs_min,
        lemma3_delta: delta,
        lemma3_check_i,
        lemma3_check_ii,
        lemma4_check,
        measured_epsilon_hat,
        wall_time_ms: PhaseTimes {
            oracle_ms: started.elapsed().as_secs_f64() * 1e3,
            ..PhaseTimes::default()
        },
        frob_product,
        product_sv,
        m,
    })
}
