//! Runtime algorithm selection: every AMM sketcher implements
//! [`AmmSketcher`] and registers under a stable name, so callers (CLI,
//! sweeps, tests) pick a strategy by string and drive it through one
//! interface.

use crate::baselines::{FdAmmSketch, SfdAmmSketch};
use crate::cod::{CodSketch, ShrinkRule};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scod::{FlushRecord, QSchedule, ScodSketch};
use crate::sparse::SparseVec;

/// Final factor pair and run accounting from a sketcher.
#[derive(Debug, Clone)]
pub struct SketchOutput {
    pub algo: &'static str,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    /// Accumulated shrink mass; for the FD baseline this is the sum of
    /// squared thresholds from the concatenated sketch.
    pub delta_sum: f64,
    /// Buffer flush count, for the sparse algorithms only.
    pub flush_count: Option<usize>,
    /// Retained per-flush diagnostics, when requested at build time.
    pub flush_log: Option<Vec<FlushRecord>>,
}

impl SketchOutput {
    /// `A^T B`, the estimator of `X^T Y`.
    pub fn product(&self) -> DenseMatrix {
        self.a.matmul_at(&self.b).expect("factor widths agree")
    }
}

/// A streaming AMM strategy: consume aligned sparse row pairs, then emit
/// the factor pair.
pub trait AmmSketcher {
    fn algo(&self) -> &'static str;
    fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()>;
    fn finalize(self: Box<Self>) -> Result<SketchOutput>;
}

/// Construction parameters shared by all registered strategies.
#[derive(Debug, Clone)]
pub struct BuildParams {
    pub m: usize,
    pub dx: usize,
    pub dy: usize,
    /// Power-iteration schedule; ignored by the dense algorithms.
    pub schedule: QSchedule,
    /// RNG seed; ignored by the deterministic algorithms.
    pub seed: u64,
    /// Retain per-flush diagnostics on the sparse algorithms.
    pub retain_diagnostics: bool,
}

impl BuildParams {
    pub fn new(m: usize, dx: usize, dy: usize) -> Self {
        BuildParams {
            m,
            dx,
            dy,
            schedule: QSchedule::default(),
            seed: 0,
            retain_diagnostics: false,
        }
    }
}

struct CodStrategy(CodSketch);

impl AmmSketcher for CodStrategy {
    fn algo(&self) -> &'static str {
        "cod"
    }

    fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        self.0.update_sparse(x_row, y_row)
    }

    fn finalize(self: Box<Self>) -> Result<SketchOutput> {
        let (a, b, delta_sum) = self.0.finalize();
        Ok(SketchOutput {
            algo: "cod",
            a,
            b,
            delta_sum,
            flush_count: None,
            flush_log: None,
        })
    }
}

struct FdAmmStrategy(FdAmmSketch);

impl AmmSketcher for FdAmmStrategy {
    fn algo(&self) -> &'static str {
        "fd-amm"
    }

    fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        self.0.update(x_row, y_row)
    }

    fn finalize(self: Box<Self>) -> Result<SketchOutput> {
        let delta_sum = self.0.delta_sum();
        let (a, b) = self.0.finalize();
        Ok(SketchOutput {
            algo: "fd-amm",
            a,
            b,
            delta_sum,
            flush_count: None,
            flush_log: None,
        })
    }
}

struct ScodStrategy {
    inner: ScodSketch,
    retain: bool,
}

impl AmmSketcher for ScodStrategy {
    fn algo(&self) -> &'static str {
        "scod"
    }

    fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        self.inner.update(x_row, y_row)
    }

    fn finalize(mut self: Box<Self>) -> Result<SketchOutput> {
        let (a, b, delta_sum, t) = self.inner.finalize()?;
        let flush_log = self.retain.then(|| self.inner.take_flush_log());
        Ok(SketchOutput {
            algo: "scod",
            a,
            b,
            delta_sum,
            flush_count: Some(t),
            flush_log,
        })
    }
}

struct SfdAmmStrategy {
    inner: SfdAmmSketch,
    retain: bool,
}

impl AmmSketcher for SfdAmmStrategy {
    fn algo(&self) -> &'static str {
        "sfd-amm"
    }

    fn update(&mut self, x_row: &SparseVec, y_row: &SparseVec) -> Result<()> {
        self.inner.update(x_row, y_row)
    }

    fn finalize(mut self: Box<Self>) -> Result<SketchOutput> {
        let (a, b, delta_sum, t) = self.inner.finalize()?;
        let flush_log = self.retain.then(|| self.inner.take_flush_log());
        Ok(SketchOutput {
            algo: "sfd-amm",
            a,
            b,
            delta_sum,
            flush_count: Some(t),
            flush_log,
        })
    }
}

type Ctor = fn(&BuildParams) -> Result<Box<dyn AmmSketcher>>;

static REGISTRY: &[(&str, Ctor)] = &[
    ("cod", |p| {
        Ok(Box::new(CodStrategy(CodSketch::with_options(
            p.m,
            p.dx,
            p.dy,
            false,
            ShrinkRule::SigmaM,
        )?)))
    }),
    ("fd-amm", |p| {
        Ok(Box::new(FdAmmStrategy(FdAmmSketch::new(p.m, p.dx, p.dy)?)))
    }),
    ("scod", |p| {
        Ok(Box::new(ScodStrategy {
            inner: ScodSketch::with_options(
                p.m,
                p.dx,
                p.dy,
                p.schedule,
                p.seed,
                p.retain_diagnostics,
                ShrinkRule::SigmaM,
            )?,
            retain: p.retain_diagnostics,
        }))
    }),
    ("sfd-amm", |p| {
        Ok(Box::new(SfdAmmStrategy {
            inner: SfdAmmSketch::with_diagnostics(
                p.m,
                p.dx,
                p.dy,
                p.schedule,
                p.seed,
                p.retain_diagnostics,
            )?,
            retain: p.retain_diagnostics,
        }))
    }),
];

/// Registered strategy names, in registry order.
pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Looks up a strategy by name and constructs it.
pub fn build(name: &str, params: &BuildParams) -> Result<Box<dyn AmmSketcher>> {
    for (n, ctor) in REGISTRY {
        if *n == name {
            return ctor(params);
        }
    }
    Err(Error::Parameter(format!(
        "unknown algorithm '{name}'; expected one of: {}",
        names().join(", ")
    )))
}

/// True when the algorithm buffers sparse rows (and so reports flush
/// counts and honors the q schedule).
pub fn is_sparse_algo(name: &str) -> bool {
    matches!(name, "scod" | "sfd-amm")
}
