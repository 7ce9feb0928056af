//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by sketching, kernels, I/O and the oracle layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape disagreement between two operands.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Invalid construction parameter (zero sketch size, bad schedule, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An underlying dense factorization failed to converge.
    #[error("{op} did not converge on a {rows}x{cols} matrix")]
    Kernel {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    /// Text-format parse failure, with the 1-based offending line.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Paired streams with different row counts.
    #[error("row alignment mismatch: x has {x_rows} rows, y has {y_rows}")]
    Alignment { x_rows: usize, y_rows: usize },

    /// A dense-oracle computation would exceed the desk-scale entry guard.
    #[error(
        "dense oracle guard exceeded: {rows}x{cols} needs {} entries, limit {limit}; \
         use the implicit error mode",
        rows * cols
    )]
    GuardExceeded {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    /// A diagnostic was requested but flush retention was not enabled.
    #[error("flush diagnostics were not retained; enable retention at construction")]
    RetentionDisabled,

    /// A kernel failure inside a buffer flush, tagged with the flush index.
    #[error("flush {flush_index}: {source}")]
    Flush {
        flush_index: usize,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_flush(self, flush_index: usize) -> Error {
        Error::Flush {
            flush_index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
