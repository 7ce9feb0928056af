//! Co-occurring directions: a one-pass paired sketch (A, B) whose product
//! `A^T B` tracks `X^T Y`. Each compaction takes QR factorizations of the
//! factor transposes, shrinks the singular values of the small interaction
//! matrix `R_x R_y^T` by its m-th singular value, and rebuilds both factors
//! with the shrunk spectrum split evenly between the two sides.

use crate::error::{Error, Result};
use crate::linalg::{qr_economy, shrink_values, thin_svd, DenseMatrix};
use crate::sparse::SparseVec;

/// Which singular value the compaction subtracts from the interaction
/// spectrum. `SigmaMPlusOne` under-shrinks and is kept only so the
/// verification suite can show that the standard threshold is load-bearing;
/// shrink-mass accounting always records sigma_m either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShrinkRule {
    #[default]
    SigmaM,
    SigmaMPlusOne,
}

/// One shared compaction for COD and the SCOD merge: QR both transposes,
/// SVD the interaction matrix, shrink, rebuild `rows_out`-row factors.
/// Returns the new factors, the recorded sigma_m, and the count of nonzero
/// rows. With the standard rule at most m - 1 rows are nonzero, so any
/// `rows_out >= m` is lossless.
pub(crate) fn shrink_compact(
    a: &DenseMatrix,
    b: &DenseMatrix,
    m: usize,
    rows_out: usize,
    rule: ShrinkRule,
) -> Result<(DenseMatrix, DenseMatrix, f64, usize)> {
    let dx = a.cols();
    let dy = b.cols();
    let (qx, rx) = qr_economy(&a.transpose())?;
    let (qy, ry) = qr_economy(&b.transpose())?;
    let interaction = rx.matmul_bt(&ry)?;
    let svd = thin_svd(&interaction)?;
    let sigma_m = svd.sigma(m);
    let threshold = match rule {
        ShrinkRule::SigmaM => sigma_m,
        ShrinkRule::SigmaMPlusOne => svd.sigma(m + 1),
    };
    let shrunk = shrink_values(&svd.singular_values, threshold);
    let kept = shrunk.iter().take_while(|&&s| s > 0.0).count();
    debug_assert!(kept <= rows_out, "shrink must fit the output row budget");

    // W = Sigma_hat^{1/2} U^T, then A = W Q_x^T (same with V, Q_y).
    let mut wx = DenseMatrix::zeros(kept, qx.cols());
    let mut wy = DenseMatrix::zeros(kept, qy.cols());
    for i in 0..kept {
        let s = shrunk[i].sqrt();
        for j in 0..wx.cols() {
            wx.set(i, j, s * svd.u.get(j, i));
        }
        for j in 0..wy.cols() {
            wy.set(i, j, s * svd.v.get(j, i));
        }
    }
    let ax = wx.matmul_bt(&qx)?;
    let by = wy.matmul_bt(&qy)?;
    let mut new_a = DenseMatrix::zeros(rows_out, dx);
    let mut new_b = DenseMatrix::zeros(rows_out, dy);
    for i in 0..kept {
        new_a.row_mut(i).copy_from_slice(ax.row(i));
        new_b.row_mut(i).copy_from_slice(by.row(i));
    }
    Ok((new_a, new_b, sigma_m, kept))
}

/// Streaming paired sketch with 2m-row working buffers filling in lockstep.
#[derive(Debug, Clone)]
pub struct CodSketch {
    m: usize,
    dx: usize,
    dy: usize,
    a: DenseMatrix,
    b: DenseMatrix,
    /// Shared insertion slot for both factors; rows `fill..2m` are zero.
    fill: usize,
    rows_seen: usize,
    delta_sum: f64,
    delta_log: Option<Vec<f64>>,
    compactions: usize,
    rule: ShrinkRule,
}

impl CodSketch {
    pub fn new(m: usize, dx: usize, dy: usize) -> Result<Self> {
        Self::with_options(m, dx, dy, false, ShrinkRule::SigmaM)
    }

    pub fn with_options(
        m: usize,
        dx: usize,
        dy: usize,
        log_deltas: bool,
        rule: ShrinkRule,
    ) -> Result<Self> {
        if m == 0 || dx == 0 || dy == 0 {
            return Err(Error::Parameter(format!(
                "CodSketch needs m, dx, dy >= 1, got m={m}, dx={dx}, dy={dy}"
            )));
        }
        Ok(CodSketch {
            m,
            dx,
            dy,
            a: DenseMatrix::zeros(2 * m, dx),
            b: DenseMatrix::zeros(2 * m, dy),
            fill: 0,
            rows_seen: 0,
            delta_sum: 0.0,
            delta_log: log_deltas.then(Vec::new),
            compactions: 0,
            rule,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Accumulated shrink mass (sum over compactions of sigma_m).
    pub fn delta_sum(&self) -> f64 {
        self.delta_sum
    }

    /// Per-compaction sigma_m values, when logging was enabled.
    pub fn delta_log(&self) -> Option<&[f64]> {
        self.delta_log.as_deref()
    }

    pub fn compactions(&self) -> usize {
        self.compactions
    }

    pub fn occupied_rows(&self) -> usize {
        self.fill
    }

    /// Inserts a row pair at the shared slot; compacts when the buffers fill.
    pub fn update(&mut self, x_row: &[f64], y_row: &[f64]) -> Result<()> {
        if x_row.len() != self.dx {
            return Err(Error::Dimension {
                context: "CodSketch::update x_row",
                expected: self.dx,
                found: x_row.len(),
            });
        }
        if y_row.len() != self.dy {
            return Err(Error::Dimension {
                context: "CodSketch::update y_row",
                expected: self.dy,
                found: y_row.len(),
            });
        }
        if x_row.iter().chain(y_row).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("CodSketch::update"));
        }
        self.a.row_mut(self.fill).copy_from_slice(x_row);
        self.b.row_mut(self.fill).copy_from_slice(y_row);
        self.advance()
    }

    /// Sparse insert; both rows scatter into the shared zero slot.
    pub fn update_sparse(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        if x_row.dim() != self.dx {
            return Err(Error::Dimension {
                context: "CodSketch::update_sparse x_row",
                expected: self.dx,
                found: x_row.dim(),
            });
        }
        if y_row.dim() != self.dy {
            return Err(Error::Dimension {
                context: "CodSketch::update_sparse y_row",
                expected: self.dy,
                found: y_row.dim(),
            });
        }
        x_row.scatter_into(self.a.row_mut(self.fill));
        y_row.scatter_into(self.b.row_mut(self.fill));
        self.advance()
    }

    fn advance(&mut self) -> Result<()> {
        self.fill += 1;
        self.rows_seen += 1;
        if self.fill == 2 * self.m {
            self.compact()?;
        }
        Ok(())
    }

    fn compact(&mut self) -> Result<()> {
        let (a, b, sigma_m, kept) =
            shrink_compact(&self.a, &self.b, self.m, 2 * self.m, self.rule)?;
        self.a = a;
        self.b = b;
        self.fill = kept;
        self.delta_sum += sigma_m;
        if let Some(log) = &mut self.delta_log {
            log.push(sigma_m);
        }
        self.compactions += 1;
        Ok(())
    }

    /// Runs a compaction immediately, regardless of fill level. This is the
    /// batch-merge checkpoint used when a caller streams row blocks and
    /// wants the shrink applied at block boundaries.
    pub fn force_compact(&mut self) -> Result<()> {
        if self.fill == 0 {
            return Ok(());
        }
        self.compact()
    }

    /// Current factors and accumulated shrink mass; no forced compaction.
    pub fn finalize(&self) -> (DenseMatrix, DenseMatrix, f64) {
        (self.a.clone(), self.b.clone(), self.delta_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::FdSketch;
    use crate::rng;

    fn product(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        a.matmul_at(b).unwrap()
    }

    fn rel_frob_diff(p: &DenseMatrix, q: &DenseMatrix) -> f64 {
        p.add_scaled(q, -1.0).unwrap().frobenius_norm() / (1.0 + q.frobenius_norm())
    }

    /// Literal per-step reference with zero-row scanning, used to pin the
    /// production implementation on a random stream.
    fn reference_cod(
        m: usize,
        dx: usize,
        dy: usize,
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
    ) -> (DenseMatrix, DenseMatrix) {
        let mut a = DenseMatrix::zeros(2 * m, dx);
        let mut b = DenseMatrix::zeros(2 * m, dy);
        for (x, y) in xs.iter().zip(ys) {
            let slot = (0..2 * m)
                .find(|&i| {
                    a.row(i).iter().all(|&v| v == 0.0) && b.row(i).iter().all(|&v| v == 0.0)
                })
                .expect("paired insertion always has a shared zero slot");
            a.row_mut(slot).copy_from_slice(x);
            b.row_mut(slot).copy_from_slice(y);
            let a_full = (0..2 * m).all(|i| a.row(i).iter().any(|&v| v != 0.0));
            let b_full = (0..2 * m).all(|i| b.row(i).iter().any(|&v| v != 0.0));
            if a_full || b_full {
                let (na, nb, _, _) = shrink_compact(&a, &b, m, 2 * m, ShrinkRule::SigmaM).unwrap();
                a = na;
                b = nb;
            }
        }
        (a, b)
    }

    #[test]
    fn constructor_shapes() {
        let s = CodSketch::new(1, 2, 2).unwrap();
        let (a, b, _) = s.finalize();
        assert_eq!((a.rows(), a.cols()), (2, 2));
        assert_eq!((b.rows(), b.cols()), (2, 2));
        let s = CodSketch::new(4, 10, 7).unwrap();
        let (a, b, _) = s.finalize();
        assert_eq!((a.rows(), a.cols()), (8, 10));
        assert_eq!((b.rows(), b.cols()), (8, 7));
        assert_eq!(product(&a, &b).max_abs(), 0.0);
        assert!(CodSketch::new(0, 2, 2).is_err());
    }

    #[test]
    fn hand_computed_two_step_compaction() {
        // m = 1: inserting (e1, e1) then (e2, e2) compacts with interaction
        // I_2, delta = 1, wiping the sketch; the final error is exactly 1.
        let mut s = CodSketch::new(1, 2, 2).unwrap();
        s.update(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        s.update(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(s.compactions(), 1);
        assert!((s.delta_sum() - 1.0).abs() < 1e-12);
        let (a, b, _) = s.finalize();
        assert!(product(&a, &b).max_abs() < 1e-12);
        // Error |X^T Y - 0| = |I_2| = 1 <= |X|_F |Y|_F / m = 2.
    }

    #[test]
    fn rank_below_m_is_exact() {
        // All rows (e1, e2) with m = 2: every compaction sees rank 1 < m so
        // delta stays 0 and A^T B = n * e1 e2^T exactly.
        let n = 23;
        let mut s = CodSketch::new(2, 3, 3).unwrap();
        for _ in 0..n {
            s.update(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        }
        assert_eq!(s.delta_sum(), 0.0);
        let (a, b, _) = s.finalize();
        let p = product(&a, &b);
        let mut expected = DenseMatrix::zeros(3, 3);
        expected.set(0, 1, n as f64);
        assert!(rel_frob_diff(&p, &expected) < 1e-10);
    }

    #[test]
    fn symmetric_stream_degrades_to_fd() {
        let (n, d, m) = (60, 6, 3);
        let data = rng::gaussian_matrix(n, d, 7);
        let mut cod = CodSketch::new(m, d, d).unwrap();
        let mut fd = FdSketch::new(m, d).unwrap();
        for t in 0..n {
            cod.update(data.row(t), data.row(t)).unwrap();
            fd.update(data.row(t)).unwrap();
        }
        let (a, b, _) = cod.finalize();
        let cod_prod = product(&a, &b);
        let f = fd.finalize();
        let fd_gram = product(&f, &f);
        assert!(rel_frob_diff(&cod_prod, &fd_gram) < 1e-8);
    }

    #[test]
    fn empty_and_single_pair() {
        let s = CodSketch::new(2, 3, 4).unwrap();
        let (a, b, delta) = s.finalize();
        assert_eq!(product(&a, &b).max_abs(), 0.0);
        assert_eq!(delta, 0.0);

        let mut s = CodSketch::new(2, 3, 4).unwrap();
        let x = [1.0, -2.0, 0.5];
        let y = [0.25, 0.0, 3.0, -1.0];
        s.update(&x, &y).unwrap();
        let (a, b, _) = s.finalize();
        let p = product(&a, &b);
        for i in 0..3 {
            for j in 0..4 {
                assert!((p.get(i, j) - x[i] * y[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_reference_trace_on_random_stream() {
        let (n, dx, dy, m) = (70, 9, 7, 3);
        let xm = rng::gaussian_matrix(n, dx, 31);
        let ym = rng::gaussian_matrix(n, dy, 32);
        let xs: Vec<Vec<f64>> = (0..n).map(|t| xm.row(t).to_vec()).collect();
        let ys: Vec<Vec<f64>> = (0..n).map(|t| ym.row(t).to_vec()).collect();
        let mut s = CodSketch::new(m, dx, dy).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            s.update(x, y).unwrap();
        }
        let (a, b, _) = s.finalize();
        let (ra, rb) = reference_cod(m, dx, dy, &xs, &ys);
        assert!(rel_frob_diff(&product(&a, &b), &product(&ra, &rb)) < 1e-8);
    }

    #[test]
    fn balanced_split_after_compaction() {
        // After a compaction sigma_i(A) = sigma_i(B) = sqrt(sigma_i(A^T B)),
        // and at most m - 1 singular values survive.
        let (n, dx, dy, m) = (40, 8, 6, 3);
        let xm = rng::gaussian_matrix(n, dx, 41);
        let ym = rng::gaussian_matrix(n, dy, 42);
        let mut s = CodSketch::new(m, dx, dy).unwrap();
        let mut seen = 0;
        for t in 0..n {
            s.update(xm.row(t), ym.row(t)).unwrap();
            if s.compactions() > seen {
                seen = s.compactions();
                assert!(s.occupied_rows() <= m - 1);
                let (a, b, _) = s.finalize();
                let sa = crate::linalg::singular_values(&a).unwrap();
                let sb = crate::linalg::singular_values(&b).unwrap();
                let sp = crate::linalg::singular_values(&product(&a, &b)).unwrap();
                assert!(sp.len() <= m - 1);
                assert_eq!(sa.len(), sb.len());
                for i in 0..sp.len() {
                    assert!(
                        (sa[i] - sb[i]).abs() <= 1e-8 * (1.0 + sa[i]),
                        "t={t} i={i} sa={sa:?} sb={sb:?} sp={sp:?}"
                    );
                    assert!(
                        (sa[i] * sb[i] - sp[i]).abs() <= 1e-8 * (1.0 + sp[i]),
                        "t={t} i={i} sa={sa:?} sb={sb:?} sp={sp:?}"
                    );
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn delta_log_records_compactions() {
        let (n, d, m) = (30, 5, 2);
        let xm = rng::gaussian_matrix(n, d, 51);
        let ym = rng::gaussian_matrix(n, d, 52);
        let mut s = CodSketch::with_options(m, d, d, true, ShrinkRule::SigmaM).unwrap();
        for t in 0..n {
            s.update(xm.row(t), ym.row(t)).unwrap();
        }
        let log = s.delta_log().unwrap();
        assert_eq!(log.len(), s.compactions());
        assert!(log.iter().all(|&d| d >= 0.0));
        let sum: f64 = log.iter().sum();
        assert!((sum - s.delta_sum()).abs() < 1e-12 * (1.0 + sum));
        // The shrink mass never exceeds the Frobenius budget over m.
        let budget = xm.frobenius_norm() * ym.frobenius_norm() / m as f64;
        assert!(s.delta_sum() <= budget * (1.0 + 1e-12));
    }

    #[test]
    fn force_compact_is_noop_on_empty_sketch() {
        let mut s = CodSketch::new(2, 3, 3).unwrap();
        s.force_compact().unwrap();
        assert_eq!(s.compactions(), 0);
        s.update(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        s.force_compact().unwrap();
        assert_eq!(s.compactions(), 1);
    }
}

