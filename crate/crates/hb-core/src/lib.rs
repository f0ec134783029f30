//! Polar codes and polar lattices for the Heegard-Berger problem.
//!
//! The Heegard-Berger setting is lossy source coding where correlated side
//! information is available at one decoder but absent at the other, so a
//! single message must serve two distortion targets at once. This crate
//! implements:
//!
//! - [`polar`] — generic polar-coding machinery: the GF(2) transform,
//!   successive-cancellation quantization and decoding driven by per-position
//!   posteriors, Monte-Carlo reliability construction, and index partitioning
//!   into frozen / information / shaping sets.
//! - [`rd`] — closed-form and optimized rate-distortion quantities for
//!   doubly-symmetric binary sources (binary entropy machinery, the
//!   constrained rate minimization over ternary test channels, region
//!   classification) and for jointly Gaussian sources.
//! - [`binary`] — the two binary Heegard-Berger codecs: a nested scheme for
//!   the closed-form sub-region and a two-level scheme covering the entire
//!   non-degenerate region, plus exact small-blocklength oracles.
//! - [`lattice`] — the Gaussian codec: discrete Gaussian constellations,
//!   flatness factor, one-dimensional binary partition chains, nested
//!   multilevel polar lattices and the MMSE reconstruction combiner.
//! - [`oracle`] — an independent density-evolution reference implementation
//!   for symmetric binary channels, used to validate the Monte-Carlo
//!   construction path in tests.
//!
//! All operations are deterministic given explicit seeds; parallelism is
//! organized by partitioning trial seeds so results do not depend on
//! scheduling.

pub mod binary;
pub mod bits;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod polar;
pub mod rd;
pub mod seed;

pub use bits::BitFrame;
pub use error::{Error, Result};
