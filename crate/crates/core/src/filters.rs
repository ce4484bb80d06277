//! Post-processing filters that drop risky synthetic rows.
//!
//! Both filters read the training data, so their output carries no
//! differential privacy guarantee even when the generator does.

use serde::{Deserialize, Serialize};

use crate::dataset::{encode, fit_encoder, Table};
use crate::error::{Error, Result};
use crate::nn::{knn, knn_within};
use crate::stats::quantile;

pub const DP_WARNING: &str =
    "privacy filters use training records directly and are not compatible with a differential privacy guarantee";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityThreshold {
    /// Fixed distance in the encoded space.
    Absolute(f64),
    /// Quantile of the train-train nearest-neighbor distances.
    Quantile(f64),
}

impl Default for SimilarityThreshold {
    fn default() -> Self {
        SimilarityThreshold::Quantile(0.01)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalReason {
    TooSimilar,
    Outlier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterResult {
    pub filtered: Table,
    /// Ascending row indices of the removed synthetic rows.
    pub removed_indices: Vec<usize>,
    pub removal_reason: RemovalReason,
    pub threshold_used: f64,
}

fn split(synth: &Table, remove: &[bool], reason: RemovalReason, threshold: f64) -> FilterResult {
    let keep: Vec<usize> = (0..synth.n_rows()).filter(|&i| !remove[i]).collect();
    let removed_indices = (0..synth.n_rows()).filter(|&i| remove[i]).collect();
    FilterResult {
        filtered: synth.select(&keep),
        removed_indices,
        removal_reason: reason,
        threshold_used: threshold,
    }
}

/// Resolves a similarity threshold against the training data. A quantile
/// that lands on zero (duplicated training rows) is lifted to the smallest
/// positive double so exact copies are still removed.
pub fn resolve_similarity_threshold(train: &Table, threshold: SimilarityThreshold) -> Result<f64> {
    match threshold {
        SimilarityThreshold::Absolute(t) if t >= 0.0 && t.is_finite() => Ok(t),
        SimilarityThreshold::Absolute(t) => Err(Error::InvalidConfig(format!("similarity threshold {t} must be >= 0"))),
        SimilarityThreshold::Quantile(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidConfig(format!("similarity quantile {q} outside (0,1)")));
            }
            if train.n_rows() < 2 {
                return Err(Error::InsufficientRows(
                    "quantile threshold needs at least 2 training rows".into(),
                ));
            }
            let stats = fit_encoder(train)?;
            let within = knn_within(&encode(train, &stats)?, 1, true)?.nearest_distances();
            Ok(quantile(&within, q).max(f64::MIN_POSITIVE))
        }
    }
}

/// Removes synthetic rows whose nearest training row lies strictly closer
/// than the resolved threshold.
pub fn similarity_filter(synth: &Table, train: &Table, threshold: SimilarityThreshold) -> Result<FilterResult> {
    train.schema().ensure_same(synth.schema(), "similarity filter")?;
    let t = resolve_similarity_threshold(train, threshold)?;
    if synth.is_empty() {
        return Ok(split(synth, &[], RemovalReason::TooSimilar, t));
    }
    let stats = fit_encoder(train)?;
    let d = knn(&encode(synth, &stats)?, &encode(train, &stats)?, 1)?.nearest_distances();
    let remove: Vec<bool> = d.iter().map(|&x| x < t).collect();
    Ok(split(synth, &remove, RemovalReason::TooSimilar, t))
}

/// Removes synthetic rows whose distance to their `k`-th nearest training row
/// exceeds the `quantile` of the training rows' own `k`-th-neighbor
/// distances (self excluded).
pub fn outlier_filter(synth: &Table, train: &Table, k: usize, quantile_level: f64) -> Result<FilterResult> {
    train.schema().ensure_same(synth.schema(), "outlier filter")?;
    if k == 0 || train.n_rows() < k + 1 {
        return Err(Error::KTooLarge {
            k,
            available: train.n_rows().saturating_sub(1),
        });
    }
    if !(quantile_level > 0.0 && quantile_level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "outlier quantile {quantile_level} outside (0,1)"
        )));
    }
    let stats = fit_encoder(train)?;
    let train_enc = encode(train, &stats)?;
    let train_scores = knn_within(&train_enc, k, true)?.distances_at(k - 1);
    let t = quantile(&train_scores, quantile_level);
    if synth.is_empty() {
        return Ok(split(synth, &[], RemovalReason::Outlier, t));
    }
    let scores = knn(&encode(synth, &stats)?, &train_enc, k)?.distances_at(k - 1);
    let remove: Vec<bool> = scores.iter().map(|&s| s > t).collect();
    Ok(split(synth, &remove, RemovalReason::Outlier, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Cell, Column, Schema};
    use crate::metrics::exact_match_share;

    fn grid(n: usize) -> Table {
        let schema = Schema::new(vec![Column::numeric("x"), Column::numeric("y")]).unwrap();
        Table::new(
            schema,
            (0..n)
                .map(|i| vec![Cell::Num((i % 10) as f64), Cell::Num((i / 10) as f64 * 1.3)])
                .collect(),
        )
        .unwrap()
    }

    fn synth_rows(rows: &[(f64, f64)]) -> Table {
        let schema = Schema::new(vec![Column::numeric("x"), Column::numeric("y")]).unwrap();
        Table::new(
            schema,
            rows.iter().map(|&(x, y)| vec![Cell::Num(x), Cell::Num(y)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn removes_copies() {
        let train = grid(100);
        let synth = synth_rows(&[(3.0, 2.6), (3.5, 2.0)]);
        let r = similarity_filter(&synth, &train, SimilarityThreshold::Absolute(1e-6)).unwrap();
        assert_eq!(r.removed_indices, vec![0]);
        assert_eq!(r.filtered.n_rows(), 1);
        assert_eq!(exact_match_share(&train, &r.filtered).unwrap(), 0.0);
    }

    #[test]
    fn zero_threshold_removes_nothing() {
        let train = grid(100);
        let r = similarity_filter(&train, &train, SimilarityThreshold::Absolute(0.0)).unwrap();
        assert!(r.removed_indices.is_empty());
    }

    #[test]
    fn quantile_on_duplicated_train_still_removes_copies() {
        let mut rows = grid(50).into_rows();
        rows.extend(grid(50).into_rows());
        let train = Table::new(grid(1).schema().clone(), rows).unwrap();
        let t = resolve_similarity_threshold(&train, SimilarityThreshold::Quantile(0.01)).unwrap();
        assert!(t > 0.0);
        let r = similarity_filter(&grid(10), &train, SimilarityThreshold::Quantile(0.01)).unwrap();
        assert_eq!(r.filtered.n_rows(), 0);
    }

    #[test]
    fn outlier_far_away_is_removed() {
        let train = grid(100);
        let synth = synth_rows(&[(4.0, 5.0), (1e6, -1e6)]);
        let r = outlier_filter(&synth, &train, 5, 0.99).unwrap();
        assert_eq!(r.removed_indices, vec![1]);
        assert_eq!(r.removal_reason, RemovalReason::Outlier);
    }

    #[test]
    fn empty_synth_is_fine() {
        let train = grid(100);
        let empty = Table::empty(train.schema().clone());
        let r = outlier_filter(&empty, &train, 5, 0.99).unwrap();
        assert_eq!(r.filtered.n_rows(), 0);
        let r = similarity_filter(&empty, &train, SimilarityThreshold::default()).unwrap();
        assert!(r.removed_indices.is_empty());
    }

    #[test]
    fn k_too_large() {
        let train = grid(5);
        assert!(matches!(
            outlier_filter(&train, &train, 5, 0.99),
            Err(Error::KTooLarge { .. })
        ));
    }

    #[test]
    fn idempotent_at_resolved_threshold() {
        let train = grid(100);
        let synth = synth_rows(&[(3.0, 2.6), (3.05, 2.6), (7.5, 7.0), (0.0, 0.0)]);
        let first = similarity_filter(&synth, &train, SimilarityThreshold::Absolute(0.2)).unwrap();
        let again = similarity_filter(
            &first.filtered,
            &train,
            SimilarityThreshold::Absolute(first.threshold_used),
        )
        .unwrap();
        assert!(again.removed_indices.is_empty());
        assert_eq!(again.filtered, first.filtered);
    }
}
