//! Concatenation baselines: run a symmetric sketch on the column-stacked
//! stream Z = [X, Y] and read the cross block of the resulting Gram
//! approximation. `FdAmmSketch` uses the dense frequent-directions sketch;
//! `SfdAmmSketch` drives the sparse engine in symmetric mode.

use crate::error::{Error, Result};
use crate::fd::FdSketch;
use crate::linalg::DenseMatrix;
use crate::scod::{FlushRecord, QSchedule, ScodSketch};
use crate::sparse::SparseVec;

fn concat_rows(
    x_row: &SparseVec,
    y_row: &SparseVec,
    dx: usize,
    dy: usize,
) -> Result<SparseVec> {
    if x_row.dim() != dx {
        return Err(Error::Dimension {
            context: "concat x_row",
            expected: dx,
            found: x_row.dim(),
        });
    }
    if y_row.dim() != dy {
        return Err(Error::Dimension {
            context: "concat y_row",
            expected: dy,
            found: y_row.dim(),
        });
    }
    let mut entries: Vec<(usize, f64)> = x_row.iter().collect();
    entries.extend(y_row.iter().map(|(i, v)| (dx + i, v)));
    SparseVec::new(dx + dy, entries)
}

/// Frequent directions on the concatenated stream; the column split of the
/// output approximates `X^T Y` through the top-right block of the Gram
/// matrix.
#[derive(Debug, Clone)]
pub struct FdAmmSketch {
    inner: FdSketch,
    dx: usize,
    dy: usize,
}

impl FdAmmSketch {
    pub fn new(m: usize, dx: usize, dy: usize) -> Result<Self> {
        if dx == 0 || dy == 0 {
            return Err(Error::Parameter(format!(
                "FdAmmSketch needs dx, dy >= 1, got dx={dx}, dy={dy}"
            )));
        }
        Ok(FdAmmSketch {
            inner: FdSketch::new(m, dx + dy)?,
            dx,
            dy,
        })
    }

    pub fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        let z = concat_rows(x_row, y_row, self.dx, self.dy)?;
        self.inner.update_sparse(&z)
    }

    pub fn update_dense(&mut self, x_row: &[f64], y_row: &[f64]) -> Result<()> {
        if x_row.len() != self.dx {
            return Err(Error::Dimension {
                context: "FdAmmSketch::update_dense x_row",
                expected: self.dx,
                found: x_row.len(),
            });
        }
        if y_row.len() != self.dy {
            return Err(Error::Dimension {
                context: "FdAmmSketch::update_dense y_row",
                expected: self.dy,
                found: y_row.len(),
            });
        }
        let mut z = Vec::with_capacity(self.dx + self.dy);
        z.extend_from_slice(x_row);
        z.extend_from_slice(y_row);
        self.inner.update(&z)
    }

    /// The full concatenated sketch, before the column split.
    pub fn concat_sketch(&self) -> DenseMatrix {
        self.inner.finalize()
    }

    pub fn delta_sum(&self) -> f64 {
        self.inner.delta_sum()
    }

    /// Splits the sketch columnwise into the (A, B) factor pair.
    pub fn finalize(&self) -> (DenseMatrix, DenseMatrix) {
        let c = self.inner.finalize();
        (c.columns(0, self.dx), c.columns(self.dx, self.dx + self.dy))
    }
}

/// Sparse concatenation baseline on the SCOD engine in symmetric mode:
/// both stream sides are the concatenated row, and the outputs split
/// columnwise. This realizes the sparse-FD baseline by specialization
/// rather than by a separate sparse frequent-directions implementation;
/// the cited prior construction also carries an extra shrink of the
/// compressed batch, which this engine does not perform.
#[derive(Debug, Clone)]
pub struct SfdAmmSketch {
    inner: ScodSketch,
    dx: usize,
    dy: usize,
}

impl SfdAmmSketch {
    pub fn new(m: usize, dx: usize, dy: usize, schedule: QSchedule, seed: u64) -> Result<Self> {
        Self::with_diagnostics(m, dx, dy, schedule, seed, false)
    }

    pub fn with_diagnostics(
        m: usize,
        dx: usize,
        dy: usize,
        schedule: QSchedule,
        seed: u64,
        retain: bool,
    ) -> Result<Self> {
        if dx == 0 || dy == 0 {
            return Err(Error::Parameter(format!(
                "SfdAmmSketch needs dx, dy >= 1, got dx={dx}, dy={dy}"
            )));
        }
        let dz = dx + dy;
        Ok(SfdAmmSketch {
            inner: ScodSketch::with_options(
                m,
                dz,
                dz,
                schedule,
                seed,
                retain,
                crate::cod::ShrinkRule::SigmaM,
            )?,
            dx,
            dy,
        })
    }

    pub fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        let z = concat_rows(x_row, y_row, self.dx, self.dy)?;
        self.inner.update(&z, &z)
    }

    pub fn delta_sum(&self) -> f64 {
        self.inner.delta_sum()
    }

    pub fn flush_count(&self) -> usize {
        self.inner.flush_count()
    }

    pub fn flush_log(&self) -> &[FlushRecord] {
        self.inner.flush_log()
    }

    pub fn take_flush_log(&mut self) -> Vec<FlushRecord> {
        self.inner.take_flush_log()
    }

    /// Flushes, then splits both symmetric factors columnwise: the X block
    /// of the first and the Y block of the second.
    pub fn finalize(&mut self) -> Result<(DenseMatrix, DenseMatrix, f64, usize)> {
        let (az, bz, delta, t) = self.inner.finalize()?;
        let a = az.columns(0, self.dx);
        let b = bz.columns(self.dx, self.dx + self.dy);
        Ok((a, b, delta, t))
    }

    /// Full inner factors over the concatenated dimension.
    pub fn finalize_concat(&mut self) -> Result<(DenseMatrix, DenseMatrix, f64, usize)> {
        self.inner.finalize()
    }
}
