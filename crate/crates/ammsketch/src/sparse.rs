//! Sparse rows, CSR matrices with streaming row-append, and the two
//! sparse-dense products the subspace power method needs. The implicit
//! product `X'^T Y'` is never materialized; it is always applied through
//! these kernels.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Sparse row vector: strictly increasing indices, nonzero finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    /// Builds from (index, value) pairs. Entries are sorted by index;
    /// duplicates and out-of-range indices are rejected, explicit zeros
    /// dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = entries
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dim {
                return Err(Error::Dimension {
                    context: "SparseVec index out of range",
                    expected: dim,
                    found: i,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseVec::new"));
            }
            if indices.last() == Some(&i) {
                return Err(Error::Parameter(format!(
                    "duplicate index {i} in sparse vector"
                )));
            }
            indices.push(i);
            values.push(v);
        }
        Ok(SparseVec {
            dim,
            indices,
            values,
        })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVec {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(row: &[f64]) -> Result<Self> {
        let entries = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        SparseVec::new(row.len(), entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.scatter_into(&mut out);
        out
    }

    /// Adds the entries into a zeroed slice of length `dim`.
    pub fn scatter_into(&self, out: &mut [f64]) {
        for (i, v) in self.iter() {
            out[i] = v;
        }
    }

    pub fn norm2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Immutable CSR matrix. Stored values are nonzero and finite.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from COO triplets. Duplicate (row, col) pairs are rejected;
    /// explicit zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let mut triplets: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .filter(|&(_, _, v)| v != 0.0)
            .collect();
        for &(r, c, v) in &triplets {
            if r >= rows {
                return Err(Error::Dimension {
                    context: "SparseMatrix row index out of range",
                    expected: rows,
                    found: r,
                });
            }
            if c >= cols {
                return Err(Error::Dimension {
                    context: "SparseMatrix col index out of range",
                    expected: cols,
                    found: c,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseMatrix::from_triplets"));
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Parameter(format!(
                    "duplicate coordinate ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = triplets.iter().map(|&(_, c, _)| c).collect();
        let values = triplets.iter().map(|&(_, _, v)| v).collect();
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_rows(cols: usize, rows: &[SparseVec]) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            if row.dim() != cols {
                return Err(Error::Dimension {
                    context: "SparseMatrix::from_rows",
                    expected: cols,
                    found: row.dim(),
                });
            }
            for (i, v) in row.iter() {
                col_idx.push(i);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        let triplets = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, triplets).expect("identity triplets are valid")
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
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            0.0
        } else {
            self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
        }
    }

    /// Entries of row `i` as (column, value) pairs.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn row_to_sparse_vec(&self, i: usize) -> SparseVec {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        SparseVec {
            dim: self.cols,
            indices: self.col_idx[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self * g`, exact, at cost O(nnz(self) * g.cols()).
    pub fn mul_dense(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != g.rows() {
            return Err(Error::Dimension {
                context: "SparseMatrix::mul_dense",
                expected: self.cols,
                found: g.rows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, g.cols());
        for i in 0..self.rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let out_row = out.row_mut(i);
            for k in lo..hi {
                let v = self.values[k];
                let g_row = g.row(self.col_idx[k]);
                for (o, &gv) in out_row.iter_mut().zip(g_row) {
                    *o += v * gv;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * g`, exact, at cost O(nnz(self) * g.cols()).
    pub fn mul_transpose_dense(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != g.rows() {
            return Err(Error::Dimension {
                context: "SparseMatrix::mul_transpose_dense",
                expected: self.rows,
                found: g.rows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.cols, g.cols());
        for i in 0..self.rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let g_row = g.row(i);
            for k in lo..hi {
                let v = self.values[k];
                let out_row = out.row_mut(self.col_idx[k]);
                for (o, &gv) in out_row.iter_mut().zip(g_row) {
                    *o += v * gv;
                }
            }
        }
        Ok(out)
    }

    pub fn densify(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let row = out.row_mut(i);
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            for k in lo..hi {
                row[self.col_idx[k]] = self.values[k];
            }
        }
        out
    }
}

/// Append-only buffer of sparse rows in arrival order, with running nnz
/// accounting. Cleared wholesale when its contents are flushed.
#[derive(Debug, Clone)]
pub struct SparseRowBuffer {
    cols: usize,
    rows: Vec<SparseVec>,
    nnz: usize,
}

impl SparseRowBuffer {
    pub fn new(cols: usize) -> Self {
        SparseRowBuffer {
            cols,
            rows: Vec::new(),
            nnz: 0,
        }
    }

    pub fn append_row(&mut self, row: SparseVec) -> Result<()> {
        if row.dim() != self.cols {
            return Err(Error::Dimension {
                context: "SparseRowBuffer::append_row",
                expected: self.cols,
                found: row.dim(),
            });
        }
        self.nnz += row.nnz();
        self.rows.push(row);
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn clear(&mut self) {
        self.rows.clear();
        self.nnz = 0;
    }

    /// Snapshot as an immutable CSR matrix.
    pub fn freeze(&self) -> SparseMatrix {
        SparseMatrix::from_rows(self.cols, &self.rows).expect("buffer rows share one width")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(SparseVec::norm2_squared)
            .sum::<f64>()
            .sqrt()
    }
}
