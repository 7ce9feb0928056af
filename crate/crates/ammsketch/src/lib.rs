//! One-pass, memory-bounded sketches for streaming approximate matrix
//! multiplication: given aligned row streams of `X` (n x dx) and `Y`
//! (n x dy), maintain small factors `(A, B)` with `A^T B ~ X^T Y`.
//!
//! Four interchangeable algorithms live behind the [`registry::AmmSketcher`]
//! trait and are selected by name:
//!
//! * `cod` — co-occurring directions, a deterministic two-sided shrink sketch;
//! * `fd-amm` — frequent directions on the column-concatenated stream;
//! * `scod` — sparse COD: buffers sparse rows and compresses each batch with
//!   a randomized subspace power method before merging;
//! * `sfd-amm` — the sparse concatenation baseline on top of the same engine.
//!
//! The [`oracle`] module turns the accuracy guarantees of these sketches
//! into checkable numbers, and [`verify`] bundles them into the acceptance
//! suite exposed by the `ammsketch verify` subcommand.

pub mod baselines;
pub mod cod;
pub mod data_io;
mod error;
pub mod fd;
pub mod linalg;
pub mod oracle;
pub mod registry;
mod rng;
pub mod scod;
pub mod sparse;
pub mod spm;
pub mod verify;

pub use error::{Error, Result};
