//! Distance-threshold membership inference.
//!
//! Each trial draws a balanced attack set: a sample of holdout rows
//! (non-members) and an equally sized sample of training rows (members).
//! A record is called a member when its nearest synthetic neighbor lies
//! within a threshold, taken as a quantile of the trial's own attack
//! distances. Precision and accuracy are averaged over all trials and mapped
//! to a grade.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{encode, fit_encoder, Table};
use crate::error::{Error, Result};
use crate::nn::knn;
use crate::rng::stream_rng;
use crate::stats::quantile_sorted;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiaConfig {
    /// Share of real rows held out when no holdout table is supplied.
    pub holdout_fraction: f64,
    /// Fraction of the holdout used as non-members in a trial; the member
    /// sample always matches it in size.
    pub train_sample_fractions: Vec<f64>,
    pub threshold_quantiles: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for MiaConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.05,
            train_sample_fractions: vec![0.5, 1.0],
            threshold_quantiles: vec![0.05, 0.1, 0.25],
            n_trials: 10,
            seed: 0,
        }
    }
}

impl MiaConfig {
    fn validate(&self) -> Result<()> {
        if self.train_sample_fractions.is_empty() || self.threshold_quantiles.is_empty() {
            return Err(Error::InvalidConfig(
                "MIA sample fractions and threshold quantiles must be non-empty".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("MIA needs at least one trial".into()));
        }
        if let Some(f) = self.train_sample_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::InvalidConfig(format!("sample fraction {f} outside (0,1]")));
        }
        if let Some(q) = self.threshold_quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::InvalidConfig(format!("threshold quantile {q} outside (0,1)")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    Excellent,
    VeryGood,
    Good,
    Moderate,
    Poor,
}

impl Grade {
    /// True when `self` is at least as good as `minimum`.
    pub fn meets(self, minimum: Grade) -> bool {
        self <= minimum
    }

    pub fn label(self) -> &'static str {
        match self {
            Grade::Excellent => "Excellent",
            Grade::VeryGood => "Very Good",
            Grade::Good => "Good",
            Grade::Moderate => "Moderate",
            Grade::Poor => "Poor",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "excellent" => Ok(Grade::Excellent),
            "verygood" => Ok(Grade::VeryGood),
            "good" => Ok(Grade::Good),
            "moderate" => Ok(Grade::Moderate),
            "poor" => Ok(Grade::Poor),
            _ => Err(Error::InvalidConfig(format!("unknown grade `{s}`"))),
        }
    }
}

/// Band table over the composite of average precision and accuracy:
/// `< 0.5` Excellent, `< 0.6` Very Good, `< 0.7` Good, `< 0.8` Moderate,
/// otherwise Poor.
pub fn grade_for(composite: f64) -> Grade {
    if composite < 0.5 {
        Grade::Excellent
    } else if composite < 0.6 {
        Grade::VeryGood
    } else if composite < 0.7 {
        Grade::Good
    } else if composite < 0.8 {
        Grade::Moderate
    } else {
        Grade::Poor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackRecord {
    /// Row of the training table: a member.
    Train(usize),
    /// Row of the holdout table: a non-member.
    Holdout(usize),
}

impl AttackRecord {
    pub fn is_member(self) -> bool {
        matches!(self, AttackRecord::Train(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackSet {
    pub records: Vec<AttackRecord>,
}

impl AttackSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_members(&self) -> usize {
        self.records.iter().filter(|r| r.is_member()).count()
    }

    /// Materializes the attack rows with their membership labels.
    pub fn to_table(&self, train: &Table, holdout: &Table) -> (Table, Vec<bool>) {
        let rows = self
            .records
            .iter()
            .map(|r| match *r {
                AttackRecord::Train(i) => train.row(i).to_vec(),
                AttackRecord::Holdout(i) => holdout.row(i).to_vec(),
            })
            .collect();
        let table = Table::new(train.schema().clone(), rows).expect("rows come from schema-checked tables");
        (table, self.records.iter().map(|r| r.is_member()).collect())
    }
}

fn draw_attack_set<R: Rng>(n_train: usize, n_holdout: usize, fraction: f64, rng: &mut R) -> Result<AttackSet> {
    if n_holdout == 0 {
        return Err(Error::InsufficientRows(
            "membership attack needs at least one holdout row".into(),
        ));
    }
    let size = ((fraction * n_holdout as f64).round() as usize).clamp(1, n_holdout);
    if n_train < size {
        return Err(Error::InsufficientRows(format!(
            "membership attack needs {size} training rows, found {n_train}"
        )));
    }
    let mut records: Vec<AttackRecord> = index::sample(rng, n_holdout, size)
        .into_iter()
        .map(AttackRecord::Holdout)
        .chain(index::sample(rng, n_train, size).into_iter().map(AttackRecord::Train))
        .collect();
    records.shuffle(rng);
    Ok(AttackSet { records })
}

/// Balanced attack set: `round(fraction * |holdout|)` holdout rows (at least
/// one) and as many training rows, shuffled.
pub fn mia_build_attack_set(train: &Table, holdout: &Table, fraction: f64, seed: u64) -> Result<AttackSet> {
    train.schema().ensure_same(holdout.schema(), "attack set")?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sample fraction {fraction} outside (0,1]"
        )));
    }
    draw_attack_set(train.n_rows(), holdout.n_rows(), fraction, &mut stream_rng(seed, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiaTrialResult {
    pub trial: usize,
    pub sample_fraction: f64,
    pub threshold_quantile: f64,
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub accuracy: f64,
}

impl MiaTrialResult {
    fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> (f64, f64) {
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let accuracy = (tp + tn) as f64 / (tp + fp + tn + fn_) as f64;
        (precision, accuracy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiaReport {
    pub trials: Vec<MiaTrialResult>,
    pub avg_precision: f64,
    pub avg_accuracy: f64,
    pub composite_score: f64,
    pub grade: Grade,
    pub seed: u64,
}

impl MiaReport {
    /// Averages trial results and grades the composite.
    pub fn from_trials(trials: Vec<MiaTrialResult>, seed: u64) -> Self {
        let n = trials.len().max(1) as f64;
        let avg_precision = trials.iter().map(|t| t.precision).sum::<f64>() / n;
        let avg_accuracy = trials.iter().map(|t| t.accuracy).sum::<f64>() / n;
        let composite_score = (avg_precision + avg_accuracy) / 2.0;
        Self {
            trials,
            avg_precision,
            avg_accuracy,
            composite_score,
            grade: grade_for(composite_score),
            seed,
        }
    }
}

/// Runs every (trial, sample fraction, threshold quantile) combination.
///
/// A record matches when its distance is at or below the threshold. Exact
/// copies sit at distance zero, and a quantile threshold over a sample with
/// many zeros is itself zero, so a strict comparison would never flag them.
pub fn mia_run(train: &Table, holdout: &Table, synth: &Table, cfg: &MiaConfig) -> Result<MiaReport> {
    cfg.validate()?;
    train.schema().ensure_same(holdout.schema(), "MIA holdout")?;
    train.schema().ensure_same(synth.schema(), "MIA synthetic")?;
    if synth.n_rows() < 2 {
        return Err(Error::InsufficientRows("MIA needs at least 2 synthetic rows".into()));
    }
    let stats = fit_encoder(train)?;
    let synth_enc = encode(synth, &stats)?;
    let train_dist = knn(&encode(train, &stats)?, &synth_enc, 1)?.nearest_distances();
    let holdout_dist = knn(&encode(holdout, &stats)?, &synth_enc, 1)?.nearest_distances();

    let mut trials = Vec::new();
    for t in 0..cfg.n_trials {
        for (f, &fraction) in cfg.train_sample_fractions.iter().enumerate() {
            let mut rng = stream_rng(cfg.seed, 0x31a_0000 + (t as u64) * 64 + f as u64);
            let set = draw_attack_set(train.n_rows(), holdout.n_rows(), fraction, &mut rng)?;
            let scored: Vec<(f64, bool)> = set
                .records
                .iter()
                .map(|r| match *r {
                    AttackRecord::Train(i) => (train_dist[i], true),
                    AttackRecord::Holdout(i) => (holdout_dist[i], false),
                })
                .collect();
            let mut sorted: Vec<f64> = scored.iter().map(|s| s.0).collect();
            sorted.sort_by(f64::total_cmp);
            for &q in &cfg.threshold_quantiles {
                let threshold = quantile_sorted(&sorted, q);
                let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
                for &(d, member) in &scored {
                    match (d <= threshold, member) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, false) => tn += 1,
                        (false, true) => fn_ += 1,
                    }
                }
                let (precision, accuracy) = MiaTrialResult::from_counts(tp, fp, tn, fn_);
                trials.push(MiaTrialResult {
                    trial: t,
                    sample_fraction: fraction,
                    threshold_quantile: q,
                    threshold,
                    tp,
                    fp,
                    tn,
                    fn_,
                    precision,
                    accuracy,
                });
            }
        }
    }
    Ok(MiaReport::from_trials(trials, cfg.seed))
}
