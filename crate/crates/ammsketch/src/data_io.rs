//! Input/output: Matrix Market ingestion of aligned sparse pairs,
//! correlated low-rank synthetic stream generation, and single-pass
//! row-pair streaming.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::orthonormal_columns;
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed};
use crate::sparse::{SparseMatrix, SparseVec};

/// Aligned single-pass stream of sparse row pairs. Once consumed it is
/// exhausted; re-iteration requires rebuilding from the source matrices.
#[derive(Debug)]
pub struct PairStream {
    x: SparseMatrix,
    y: SparseMatrix,
    cursor: usize,
}

impl PairStream {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn dx(&self) -> usize {
        self.x.cols()
    }

    pub fn dy(&self) -> usize {
        self.y.cols()
    }

    pub fn remaining(&self) -> usize {
        self.n() - self.cursor
    }
}

impl Iterator for PairStream {
    type Item = (SparseVec, SparseVec);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor >= self.x.rows() {
            return None;
        }
        let t = self.cursor;
        self.cursor += 1;
        Some((self.x.row_to_sparse_vec(t), self.y.row_to_sparse_vec(t)))
    }
}

/// Pairs two matrices into an aligned stream; row counts must agree.
pub fn zip_pair(x: SparseMatrix, y: SparseMatrix) -> Result<PairStream> {
    if x.rows() != y.rows() {
        return Err(Error::Alignment {
            x_rows: x.rows(),
            y_rows: y.rows(),
        });
    }
    Ok(PairStream { x, y, cursor: 0 })
}

/// Correlated low-rank pair generator settings.
///
/// Both sides share latent factors `H` (n x r, standard normal) scaled by
/// the spectrum `s_i = decay^(i-1)`, projected through independent random
/// orthonormal frames, plus optional dense Gaussian noise. Each entry of
/// the dense result is kept with probability `density` and rescaled by
/// `1/density`, which keeps the sparse stream unbiased for the dense one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub dx: usize,
    pub dy: usize,
    pub latent_rank: usize,
    pub decay: f64,
    pub noise_scale: f64,
    pub density: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dx == 0 || self.dy == 0 {
            return Err(Error::Parameter(format!(
                "synthetic config needs n, dx, dy >= 1, got n={}, dx={}, dy={}",
                self.n, self.dx, self.dy
            )));
        }
        if self.latent_rank == 0 || self.latent_rank > self.dx.min(self.dy) {
            return Err(Error::Parameter(format!(
                "latent rank must be in 1..=min(dx, dy), got {}",
                self.latent_rank
            )));
        }
        if self.decay.is_nan() || self.decay <= 0.0 || self.decay > 1.0 {
            return Err(Error::Parameter(format!(
                "decay must be in (0, 1], got {}",
                self.decay
            )));
        }
        if self.noise_scale.is_nan() || self.noise_scale < 0.0 {
            return Err(Error::Parameter(format!(
                "noise_scale must be >= 0, got {}",
                self.noise_scale
            )));
        }
        if self.density.is_nan() || self.density <= 0.0 || self.density > 1.0 {
            return Err(Error::Parameter(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// Parses `key=value` text with comma or whitespace separators, e.g.
    /// `n=2000,dx=200,dy=200,rank=10,decay=0.8,density=0.02,seed=7`.
    /// Unset noise defaults to 0 and seed to 0.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SynthConfig {
            n: 0,
            dx: 0,
            dy: 0,
            latent_rank: 0,
            decay: 1.0,
            noise_scale: 0.0,
            density: 1.0,
            seed: 0,
        };
        let bad = |key: &str, val: &str| {
            Error::Parameter(format!("invalid synthetic value {key}={val}"))
        };
        for (idx, token) in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let (key, val) = token.split_once('=').ok_or_else(|| {
                Error::Parameter(format!(
                    "synthetic config token {} ('{token}') is not key=value",
                    idx + 1
                ))
            })?;
            match key {
                "n" => cfg.n = val.parse().map_err(|_| bad(key, val))?,
                "dx" => cfg.dx = val.parse().map_err(|_| bad(key, val))?,
                "dy" => cfg.dy = val.parse().map_err(|_| bad(key, val))?,
                "rank" => cfg.latent_rank = val.parse().map_err(|_| bad(key, val))?,
                "decay" => cfg.decay = val.parse().map_err(|_| bad(key, val))?,
                "noise" => cfg.noise_scale = val.parse().map_err(|_| bad(key, val))?,
                "density" => cfg.density = val.parse().map_err(|_| bad(key, val))?,
                "seed" => cfg.seed = val.parse().map_err(|_| bad(key, val))?,
                other => {
                    return Err(Error::Parameter(format!(
                        "unknown synthetic config key '{other}'"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Generates the aligned sparse pair as matrices. Deterministic in the
/// seed.
pub fn gen_synthetic_matrices(cfg: &SynthConfig) -> Result<(SparseMatrix, SparseMatrix)> {
    cfg.validate()?;
    let r = cfg.latent_rank;

    let frame = |dim: usize, stream: u64| -> Result<crate::linalg::DenseMatrix> {
        let raw = gaussian_matrix(dim, r, derive_seed(cfg.seed, stream));
        orthonormal_columns(&raw)
    };
    let p_x = frame(cfg.dx, 1)?;
    let p_y = frame(cfg.dy, 2)?;
    let spectrum: Vec<f64> = (0..r).map(|i| cfg.decay.powi(i as i32)).collect();

    let mut rng_latent = rng_from_seed(derive_seed(cfg.seed, 3));
    let mut rng_noise_x = rng_from_seed(derive_seed(cfg.seed, 4));
    let mut rng_noise_y = rng_from_seed(derive_seed(cfg.seed, 5));
    let mut rng_keep_x = rng_from_seed(derive_seed(cfg.seed, 6));
    let mut rng_keep_y = rng_from_seed(derive_seed(cfg.seed, 7));

    let mut x_rows = Vec::with_capacity(cfg.n);
    let mut y_rows = Vec::with_capacity(cfg.n);
    let mut scaled = vec![0.0; r];
    for _ in 0..cfg.n {
        for s in scaled.iter_mut() {
            let h: f64 = rng_latent.sample(StandardNormal);
            *s = h;
        }
        for (s, w) in scaled.iter_mut().zip(&spectrum) {
            *s *= w;
        }
        let x_row = sample_side(
            &p_x,
            &scaled,
            cfg,
            &mut rng_noise_x,
            &mut rng_keep_x,
        )?;
        let y_row = sample_side(
            &p_y,
            &scaled,
            cfg,
            &mut rng_noise_y,
            &mut rng_keep_y,
        )?;
        x_rows.push(x_row);
        y_rows.push(y_row);
    }
    Ok((
        SparseMatrix::from_rows(cfg.dx, &x_rows)?,
        SparseMatrix::from_rows(cfg.dy, &y_rows)?,
    ))
}

fn sample_side(
    frame: &crate::linalg::DenseMatrix,
    scaled_latent: &[f64],
    cfg: &SynthConfig,
    rng_noise: &mut rand_chacha::ChaCha8Rng,
    rng_keep: &mut rand_chacha::ChaCha8Rng,
) -> Result<SparseVec> {
    let dim = frame.rows();
    let mut entries = Vec::new();
    for j in 0..dim {
        let keep = cfg.density >= 1.0 || rng_keep.random::<f64>() < cfg.density;
        if !keep {
            continue;
        }
        let mut v = crate::linalg::dot(frame.row(j), scaled_latent);
        if cfg.noise_scale > 0.0 {
            let noise: f64 = rng_noise.sample(StandardNormal);
            v += cfg.noise_scale * noise;
        }
        entries.push((j, v / cfg.density));
    }
    SparseVec::new(dim, entries)
}

/// Generates the pair and wraps it as a single-pass stream.
pub fn gen_synthetic_pair(cfg: &SynthConfig) -> Result<PairStream> {
    let (x, y) = gen_synthetic_matrices(cfg)?;
    zip_pair(x, y)
}

/// Outcome of a Matrix Market read: the matrix plus the count of explicit
/// zeros dropped during ingestion.
#[derive(Debug)]
pub struct MtxRead {
    pub matrix: SparseMatrix,
    pub dropped_zeros: usize,
}

/// Reads a 1-indexed `matrix coordinate real general` Matrix Market file.
/// Comment lines starting with `%` may follow the header. Duplicate
/// coordinates are rejected; explicit zeros are dropped and counted.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MtxRead> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    parse_header(&header)?;

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: Vec<(usize, usize)> = Vec::new();
    let mut dropped_zeros = 0usize;

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!(
                            "size line must be 'rows cols nnz', got '{trimmed}'"
                        ),
                    });
                }
                let parse = |s: &str| -> Result<usize> {
                    s.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("invalid size field '{s}'"),
                    })
                };
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                triplets.reserve(nnz);
                seen.reserve(nnz);
                dims = Some((r, c, nnz));
            }
            Some((rows, cols, nnz)) => {
                if triplets.len() + dropped_zeros == nnz {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("more than the declared {nnz} entries"),
                    });
                }
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("entry must be 'row col value', got '{trimmed}'"),
                    });
                }
                let r: usize = fields[0].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid row index '{}'", fields[0]),
                })?;
                let c: usize = fields[1].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid col index '{}'", fields[1]),
                })?;
                let v: f64 = fields[2].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid real value '{}'", fields[2]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("non-finite value '{}'", fields[2]),
                    });
                }
                if r == 0 || r > rows || c == 0 || c > cols {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!(
                            "index ({r}, {c}) outside 1..={rows} x 1..={cols}"
                        ),
                    });
                }
                seen.push((r - 1, c - 1));
                if v == 0.0 {
                    dropped_zeros += 1;
                } else {
                    triplets.push((r - 1, c - 1, v));
                }
            }
        }
    }

    let (rows, cols, nnz) = dims.ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    if seen.len() != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("declared {nnz} entries but found {}", seen.len()),
        });
    }
    // Duplicates are rejected across all coordinates, dropped zeros
    // included.
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Parse {
            line: 0,
            msg: format!("duplicate coordinate ({}, {})", w[0].0 + 1, w[0].1 + 1),
        });
    }
    Ok(MtxRead {
        matrix: SparseMatrix::from_triplets(rows, cols, triplets)?,
        dropped_zeros,
    })
}

fn parse_header(header: &str) -> Result<()> {
    let fields: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "general"];
    if fields.len() != expected.len()
        || fields.iter().zip(expected).any(|(f, e)| f != e)
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header must be '%%MatrixMarket matrix coordinate real general', got '{header}'"
            ),
        });
    }
    Ok(())
}

/// Writes a matrix in the same format `read_matrix_market` accepts.
/// Values are printed in shortest round-trip scientific notation.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for i in 0..m.rows() {
        for (j, v) in m.row_entries(i) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shape and density metadata for the public cross-language corpora the
/// harness was tuned against. Densities are matched to 10% because the
/// bag-of-words vectorization (vocabulary cut, weighting) is not part of
/// this library.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownDataset {
    pub name: &'static str,
    pub n: usize,
    pub dx: usize,
    pub dy: usize,
    pub density_x: f64,
    pub density_y: f64,
}

/// Relative tolerance for [`KnownDataset::check_density`].
pub const DENSITY_RTOL: f64 = 0.10;

pub fn known_datasets() -> &'static [KnownDataset] {
    &[
        KnownDataset { name: "apr-en-fr", n: 23_200, dx: 28_000, dy: 42_800, density_x: 6.31e-4, density_y: 4.53e-4 },
        KnownDataset { name: "pan-en-fr", n: 89_000, dx: 51_200, dy: 99_600, density_x: 4.38e-4, density_y: 2.43e-4 },
        KnownDataset { name: "jrc-en-fr", n: 150_000, dx: 172_000, dy: 187_000, density_x: 1.65e-4, density_y: 1.64e-4 },
        KnownDataset { name: "jrc-en-es", n: 150_000, dx: 172_000, dy: 192_000, density_x: 1.65e-4, density_y: 1.60e-4 },
        KnownDataset { name: "jrc-fr-es", n: 150_000, dx: 187_000, dy: 192_000, density_x: 1.64e-4, density_y: 1.60e-4 },
        KnownDataset { name: "euro-en-fr", n: 476_000, dx: 72_500, dy: 87_700, density_x: 3.46e-4, density_y: 3.65e-4 },
        KnownDataset { name: "euro-en-es", n: 476_000, dx: 72_500, dy: 88_000, density_x: 3.46e-4, density_y: 3.47e-4 },
        KnownDataset { name: "euro-fr-es", n: 476_000, dx: 87_700, dy: 88_000, density_x: 3.65e-4, density_y: 3.47e-4 },
    ]
}

pub fn find_dataset(name: &str) -> Option<&'static KnownDataset> {
    known_datasets().iter().find(|d| d.name == name)
}

impl KnownDataset {
    /// Checks the row count and the named side's column count.
    pub fn check_dims(&self, side: Side, rows: usize, cols: usize) -> Result<()> {
        let expected_cols = match side {
            Side::X => self.dx,
            Side::Y => self.dy,
        };
        if rows != self.n {
            return Err(Error::Dimension {
                context: "dataset row count",
                expected: self.n,
                found: rows,
            });
        }
        if cols != expected_cols {
            return Err(Error::Dimension {
                context: "dataset column count",
                expected: expected_cols,
                found: cols,
            });
        }
        Ok(())
    }

    /// Checks nnz/(rows*cols) against the catalog density within
    /// [`DENSITY_RTOL`].
    pub fn check_density(&self, side: Side, nnz: usize, rows: usize, cols: usize) -> Result<()> {
        let expected = match side {
            Side::X => self.density_x,
            Side::Y => self.density_y,
        };
        let measured = nnz as f64 / (rows as f64 * cols as f64);
        let rel = (measured - expected).abs() / expected;
        if rel > DENSITY_RTOL {
            return Err(Error::Parameter(format!(
                "{} side {side:?}: density {measured:.3e} deviates {rel:.1}% from expected {expected:.3e}",
                self.name,
                rel = rel * 100.0
            )));
        }
        Ok(())
    }
}

/// Which side of an aligned pair a matrix is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}
