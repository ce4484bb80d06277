//! Empirical privacy audits for tabular synthetic data.
//!
//! The crate loads a real training table, an optional holdout table and a
//! synthetic table, embeds them into one mixed-type Euclidean space and runs
//! a suite of distance- and attack-based privacy measurements: identical
//! match share, distance to closest record, nearest-neighbor distance ratio,
//! nearest-neighbor adversarial accuracy, a no-box distance-threshold
//! membership inference attack, a KNN attribute inference attack and
//! k-anonymity / l-diversity. Post-processing filters and seeded baseline
//! generators round it out.

pub mod anonymity;
pub mod attacks;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod filters;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
