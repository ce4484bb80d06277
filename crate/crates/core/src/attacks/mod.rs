//! No-box attack simulations that only see the synthetic table.

pub mod aia;
pub mod mia;

pub use aia::{aia_aggregate_neighbors, aia_run, AiaColumnResult, AiaConfig, AiaReport, QidMode};
pub use mia::{
    grade_for, mia_build_attack_set, mia_run, AttackRecord, AttackSet, Grade, MiaConfig, MiaReport, MiaTrialResult,
};
