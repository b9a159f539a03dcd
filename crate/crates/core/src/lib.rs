//! Generalized Shannon entropy (GSE) for discrete distributions on countable
//! alphabets.
//!
//! The order-`m` GSE of a distribution `p` is the Shannon entropy of its
//! conditional distribution of total collision, `p_{m,k} = p_k^m / Σ p_i^m`.
//! Unlike Shannon entropy it is finite for every distribution once `m ≥ 2`,
//! and its plug-in estimator is asymptotically normal without tail
//! conditions.
//!
//! Modules:
//!
//! - [`dist`]: source distributions (Zeta, geometric, uniform, custom), the
//!   Riemann zeta normalizer, series truncation and seeded sampling.
//! - [`gse`]: the collision transform and exact GSE / Shannon entropy.
//! - [`estimate`]: plug-in estimator, asymptotic variance and intervals.
//! - [`oracle`]: independent gradient and variance checks.
//! - [`sim`]: Monte Carlo coverage experiments and sweeps.
//! - [`ingest`]: count-data CSV and raw-label ingestion.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod estimate;
pub mod gse;
pub mod ingest;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod special;

pub use dist::{AnalyticDistribution, DiscretePmf, SampleCounts};
pub use error::{GseError, Result};
pub use estimate::{ConfidenceInterval, GseEstimate};
pub use gse::CdotcPmf;
pub use sim::{CoveragePoint, SweepResult};

/// Default tolerance for truncated infinite sums.
pub const DEFAULT_EPS: f64 = 1e-10;
