//! Record-level privacy metrics: identical match share, distance to closest
//! record, nearest-neighbor distance ratio and nearest-neighbor adversarial
//! accuracy.
//!
//! All distance metrics operate on [`EncodedMatrix`] values fitted on the
//! training table. Within-set distances always exclude the query row itself.

use std::collections::HashSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{full_row_key, EncodedMatrix, Table};
use crate::error::{Error, Result};
use crate::nn::{knn, knn_within};
use crate::rng::stream_rng;
use crate::stats::{mean, quantile_sorted};

/// Ratios with a second-neighbor distance at or below this are degenerate.
pub const NNDR_EPSILON: f64 = 1e-12;

/// Tolerances for the comparative verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Allowed excess of the share-closer-to-train above one half.
    pub dcr_share_margin: f64,
    /// Absolute median difference under which two NNDR distributions agree.
    pub nndr_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            dcr_share_margin: 0.0,
            nndr_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub median: f64,
    pub p5: f64,
    pub mean: f64,
    pub min: f64,
    pub n: usize,
}

impl DistanceSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientRows("cannot summarize an empty distance set".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            median: quantile_sorted(&sorted, 0.5),
            p5: quantile_sorted(&sorted, 0.05),
            mean: mean(&sorted),
            min: sorted[0],
            n: sorted.len(),
        })
    }
}

// ---------------------------------------------------------------------------
// Identical match share

/// Fraction of `other` rows whose full canonical tuple occurs in `train`.
/// An empty `other` has share 0.
pub fn exact_match_share(train: &Table, other: &Table) -> Result<f64> {
    train.schema().ensure_same(other.schema(), "exact match share")?;
    if other.is_empty() {
        return Ok(0.0);
    }
    let keys: HashSet<String> = train.rows().iter().map(|r| full_row_key(r)).collect();
    let hits = other.rows().iter().filter(|r| keys.contains(&full_row_key(r))).count();
    Ok(hits as f64 / other.n_rows() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImsResult {
    pub train_synth_share: f64,
    pub train_test_share: f64,
    pub pass: bool,
}

/// Passes when the synthetic table replicates training rows no more often
/// than the held-out real rows do.
pub fn ims_test(train: &Table, test: &Table, synth: &Table) -> Result<ImsResult> {
    let train_synth_share = exact_match_share(train, synth)?;
    let train_test_share = exact_match_share(train, test)?;
    Ok(ImsResult {
        train_synth_share,
        train_test_share,
        pass: train_synth_share <= train_test_share,
    })
}

// ---------------------------------------------------------------------------
// Distance to closest record

/// Nearest-reference distance of every query row.
pub fn dcr_values(queries: &EncodedMatrix, reference: &EncodedMatrix) -> Result<Vec<f64>> {
    Ok(knn(queries, reference, 1)?.nearest_distances())
}

/// Nearest other-row distance of every row of `matrix`.
pub fn dcr_within_values(matrix: &EncodedMatrix) -> Result<Vec<f64>> {
    if matrix.n_rows() < 2 {
        return Err(Error::InsufficientRows("within-set DCR needs at least 2 rows".into()));
    }
    Ok(knn_within(matrix, 1, true)?.nearest_distances())
}

/// Summary of each query row's distance to its closest reference row.
pub fn dcr(queries: &EncodedMatrix, reference: &EncodedMatrix) -> Result<DistanceSummary> {
    DistanceSummary::from_values(&dcr_values(queries, reference)?)
}

/// Within-set DCR, self excluded.
pub fn dcr_within(matrix: &EncodedMatrix) -> Result<DistanceSummary> {
    DistanceSummary::from_values(&dcr_within_values(matrix)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcrVerdicts {
    /// Train-train median DCR strictly below train-synth median DCR.
    pub train_train_below_train_synth: bool,
    /// Within-synth median DCR at least the within-real median DCR.
    pub no_model_collapse: bool,
    /// Share of synthetic rows closer to train than to holdout at most 0.5.
    pub share_closer_to_train: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcrReport {
    pub train_synth: DistanceSummary,
    pub train_train: DistanceSummary,
    pub within_real: DistanceSummary,
    pub within_synth: DistanceSummary,
    pub holdout_synth: DistanceSummary,
    pub share_closer_to_train: f64,
    pub verdicts: DcrVerdicts,
}

fn seeded_subset(n: usize, m: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut idx = index::sample(&mut stream_rng(seed, stream), n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Shrinks the larger of two matrices to the size of the smaller one.
fn size_matched(a: &EncodedMatrix, b: &EncodedMatrix, seed: u64) -> (EncodedMatrix, EncodedMatrix) {
    let m = a.n_rows().min(b.n_rows());
    let shrink = |x: &EncodedMatrix, stream| {
        if x.n_rows() == m {
            x.clone()
        } else {
            x.select_rows(&seeded_subset(x.n_rows(), m, seed, stream))
        }
    };
    (shrink(a, 0xdc0), shrink(b, 0xdc1))
}

/// All DCR variants and their verdicts.
///
/// `within_real` and `within_synth` are computed on equally sized seeded
/// subsets of train and synth, because nearest-neighbor distances shrink as
/// a set grows; with equal sizes `within_real` equals `train_train`.
/// `share_closer_to_train` counts ties as closer to holdout.
pub fn dcr_suite(
    train: &EncodedMatrix,
    holdout: &EncodedMatrix,
    synth: &EncodedMatrix,
    thresholds: &Thresholds,
    seed: u64,
) -> Result<DcrReport> {
    for (name, m) in [("train", train), ("holdout", holdout), ("synthetic", synth)] {
        if m.n_rows() < 2 {
            return Err(Error::InsufficientRows(format!(
                "DCR suite needs at least 2 {name} rows"
            )));
        }
    }
    let to_train = dcr_values(synth, train)?;
    let to_holdout = dcr_values(synth, holdout)?;
    let closer = to_train.iter().zip(&to_holdout).filter(|(t, h)| t < h).count();
    let share_closer_to_train = closer as f64 / synth.n_rows() as f64;

    let train_synth = DistanceSummary::from_values(&to_train)?;
    let holdout_synth = DistanceSummary::from_values(&to_holdout)?;
    let train_train = dcr_within(train)?;
    let (real_sub, synth_sub) = size_matched(train, synth, seed);
    let within_real = dcr_within(&real_sub)?;
    let within_synth = dcr_within(&synth_sub)?;

    let verdicts = DcrVerdicts {
        train_train_below_train_synth: train_train.median < train_synth.median,
        no_model_collapse: within_synth.median >= within_real.median,
        share_closer_to_train: share_closer_to_train <= 0.5 + thresholds.dcr_share_margin,
    };
    Ok(DcrReport {
        train_synth,
        train_train,
        within_real,
        within_synth,
        holdout_synth,
        share_closer_to_train,
        verdicts,
    })
}

// ---------------------------------------------------------------------------
// Nearest-neighbor distance ratio

/// `d1 / d2` with the degenerate cases pinned: coincident first and second
/// neighbors give 1, an exact hit on an isolated record gives 0.
pub fn distance_ratio(d1: f64, d2: f64) -> f64 {
    if d2 <= NNDR_EPSILON {
        1.0
    } else if d1 <= NNDR_EPSILON {
        0.0
    } else {
        (d1 / d2).min(1.0)
    }
}

pub fn nndr_values(queries: &EncodedMatrix, reference: &EncodedMatrix) -> Result<Vec<f64>> {
    if reference.n_rows() < 2 {
        return Err(Error::InsufficientRows("NNDR needs at least 2 reference rows".into()));
    }
    let r = knn(queries, reference, 2)?;
    Ok((0..r.n_queries())
        .map(|q| {
            let n = r.of(q);
            distance_ratio(n[0].distance, n[1].distance)
        })
        .collect())
}

pub fn nndr_within_values(matrix: &EncodedMatrix) -> Result<Vec<f64>> {
    if matrix.n_rows() < 3 {
        return Err(Error::InsufficientRows("within-set NNDR needs at least 3 rows".into()));
    }
    let r = knn_within(matrix, 2, true)?;
    Ok((0..r.n_queries())
        .map(|q| {
            let n = r.of(q);
            distance_ratio(n[0].distance, n[1].distance)
        })
        .collect())
}

/// Summary of nearest / second-nearest distance ratios.
pub fn nndr(queries: &EncodedMatrix, reference: &EncodedMatrix) -> Result<DistanceSummary> {
    DistanceSummary::from_values(&nndr_values(queries, reference)?)
}

pub fn nndr_within(matrix: &EncodedMatrix) -> Result<DistanceSummary> {
    DistanceSummary::from_values(&nndr_within_values(matrix)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NndrVerdicts {
    /// Train-synth and holdout-synth medians within the tolerance.
    pub train_holdout_consistent: bool,
    /// Synth-synth median within the tolerance of train-train.
    pub no_model_collapse: bool,
    /// Train-synth median below holdout-synth by more than the tolerance:
    /// synthetic rows sit unusually close to individual training rows.
    pub leak_suspected: bool,
    /// Train-synth median above holdout-synth by more than the tolerance.
    pub fidelity_loss_suspected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NndrReport {
    pub train_synth: DistanceSummary,
    pub holdout_synth: DistanceSummary,
    pub train_train: DistanceSummary,
    pub synth_synth: DistanceSummary,
    pub verdicts: NndrVerdicts,
}

pub fn nndr_suite(
    train: &EncodedMatrix,
    holdout: &EncodedMatrix,
    synth: &EncodedMatrix,
    thresholds: &Thresholds,
) -> Result<NndrReport> {
    let tau = thresholds.nndr_tolerance;
    let train_synth = nndr(synth, train)?;
    let holdout_synth = nndr(synth, holdout)?;
    let train_train = nndr_within(train)?;
    let synth_synth = nndr_within(synth)?;
    let gap = train_synth.median - holdout_synth.median;
    let verdicts = NndrVerdicts {
        train_holdout_consistent: gap.abs() <= tau,
        no_model_collapse: (synth_synth.median - train_train.median).abs() <= tau,
        leak_suspected: gap < -tau,
        fidelity_loss_suspected: gap > tau,
    };
    Ok(NndrReport {
        train_synth,
        holdout_synth,
        train_train,
        synth_synth,
        verdicts,
    })
}

// ---------------------------------------------------------------------------
// Nearest-neighbor adversarial accuracy

/// Adversarial accuracy between a target and a source sample:
/// the mean of `1(d_TS > d_TT)` over target rows and of `1(d_ST > d_SS)` over
/// source rows, halved and summed. Within-set distances exclude the row
/// itself; the comparisons are strict. Each term averages over its own set,
/// so unequal sizes are accepted (callers wanting the textbook form pass
/// equal-sized samples).
pub fn nnaa(target: &EncodedMatrix, source: &EncodedMatrix) -> Result<f64> {
    if target.n_rows() < 2 || source.n_rows() < 2 {
        return Err(Error::InsufficientRows(
            "adversarial accuracy needs at least 2 rows on each side".into(),
        ));
    }
    let d_ts = dcr_values(target, source)?;
    let d_tt = dcr_within_values(target)?;
    let d_st = dcr_values(source, target)?;
    let d_ss = dcr_within_values(source)?;
    let frac = |a: &[f64], b: &[f64]| a.iter().zip(b).filter(|(x, y)| x > y).count() as f64 / a.len() as f64;
    Ok(0.5 * (frac(&d_ts, &d_tt) + frac(&d_st, &d_ss)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnaaResult {
    pub train_aa: f64,
    pub test_aa: f64,
    pub privacy_loss: f64,
    pub n_repetitions: usize,
    pub sample_size: usize,
    pub seed: u64,
}

/// Expected train and test adversarial accuracy over seeded equal-size
/// samples, and their difference.
pub fn nnaa_privacy_loss(
    train: &EncodedMatrix,
    test: &EncodedMatrix,
    synth: &EncodedMatrix,
    n_repetitions: usize,
    seed: u64,
) -> Result<NnaaResult> {
    if n_repetitions == 0 {
        return Err(Error::InvalidConfig("NNAA needs at least one repetition".into()));
    }
    let m = train.n_rows().min(test.n_rows());
    if synth.n_rows() < m {
        return Err(Error::InsufficientRows(format!(
            "NNAA needs at least {m} synthetic rows, found {}",
            synth.n_rows()
        )));
    }
    if m < 2 {
        return Err(Error::InsufficientRows(
            "NNAA needs at least 2 train and test rows".into(),
        ));
    }
    let sample = |x: &EncodedMatrix, stream: u64| {
        if x.n_rows() == m {
            x.clone()
        } else {
            x.select_rows(&seeded_subset(x.n_rows(), m, seed, stream))
        }
    };
    let mut train_sum = 0.0;
    let mut test_sum = 0.0;
    for r in 0..n_repetitions as u64 {
        let base = 0xaa00 + 4 * r;
        train_sum += nnaa(&sample(train, base), &sample(synth, base + 1))?;
        test_sum += nnaa(&sample(test, base + 2), &sample(synth, base + 3))?;
    }
    let train_aa = train_sum / n_repetitions as f64;
    let test_aa = test_sum / n_repetitions as f64;
    Ok(NnaaResult {
        train_aa,
        test_aa,
        privacy_loss: test_aa - train_aa,
        n_repetitions,
        sample_size: m,
        seed,
    })
}
