//! KNN attribute inference.
//!
//! For each attack record the adversary knows the quasi-identifier cells,
//! finds the `k` nearest synthetic rows in the quasi-identifier subspace and
//! predicts every remaining column from them (mode for categorical, mean for
//! numeric). Quasi-identifiers are either fixed or drawn at random per
//! record.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{encode_columns, fit_encoder, Cell, ColumnKind, ColumnStats, Schema, Table};
use crate::error::{Error, Result};
use crate::nn::{column_entropy, knn};
use crate::rng::stream_rng;

const DEFAULT_ATTACK_SHARE: f64 = 0.2;
const DEFAULT_ATTACK_CAP: usize = 5000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QidMode {
    FixedQids(Vec<String>),
    /// Number of columns drawn as quasi-identifiers for each record.
    RandomQids(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiaConfig {
    pub mode: QidMode,
    pub k: usize,
    /// Numeric predictions within this fraction of the column's real range count as correct.
    pub numeric_match_tolerance: f64,
    /// Defaults to 20% of the real rows, capped at 5000.
    pub n_attack_records: Option<usize>,
    pub seed: u64,
}

impl AiaConfig {
    pub fn new(mode: QidMode) -> Self {
        Self {
            mode,
            k: 5,
            numeric_match_tolerance: 0.1,
            n_attack_records: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiaColumnResult {
    pub column: String,
    pub accuracy: f64,
    pub n_evaluated: usize,
    pub entropy: f64,
    pub entropy_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiaReport {
    pub per_column: Vec<AiaColumnResult>,
    pub overall_unweighted: f64,
    /// Zero when every evaluated column has zero entropy.
    pub overall_entropy_weighted: f64,
    pub n_attack_records: usize,
    pub k: usize,
    pub seed: u64,
}

/// Collapses neighbor rows into one predicted record: per-column mode
/// (ties go to the lexicographically smallest value) or mean, ignoring
/// missing cells. A column with only missing cells predicts missing.
pub fn aia_aggregate_neighbors(schema: &Schema, neighbors: &[&[Cell]]) -> Result<Vec<Cell>> {
    if neighbors.is_empty() {
        return Err(Error::InsufficientRows(
            "aggregation needs at least one neighbor".into(),
        ));
    }
    if let Some(bad) = neighbors.iter().find(|r| r.len() != schema.len()) {
        return Err(Error::SchemaMismatch(format!(
            "neighbor has {} cells, schema has {} columns",
            bad.len(),
            schema.len()
        )));
    }
    Ok((0..schema.len())
        .map(|c| aggregate_column(schema.columns()[c].kind, neighbors.iter().map(|r| &r[c])))
        .collect())
}

fn aggregate_column<'a>(kind: ColumnKind, cells: impl Iterator<Item = &'a Cell>) -> Cell {
    match kind {
        ColumnKind::Numeric => {
            let (sum, n) = cells
                .filter_map(Cell::as_num)
                .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            if n == 0 {
                Cell::Missing
            } else {
                Cell::Num(sum / n as f64)
            }
        }
        ColumnKind::Categorical => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for cell in cells {
                if let Cell::Cat(s) = cell {
                    *counts.entry(s.as_str()).or_default() += 1;
                }
            }
            // BTreeMap iterates in ascending order; keep the first maximum
            let mut best: Option<(&str, usize)> = None;
            for (value, count) in counts {
                if best.is_none_or(|(_, c)| count > c) {
                    best = Some((value, count));
                }
            }
            best.map_or(Cell::Missing, |(v, _)| Cell::Cat(v.to_string()))
        }
    }
}

fn is_correct(pred: &Cell, truth: &Cell, stats: &ColumnStats, tolerance: f64) -> bool {
    match (pred, truth) {
        (Cell::Num(p), Cell::Num(t)) => (p - t).abs() <= tolerance * stats.range(),
        (Cell::Cat(p), Cell::Cat(t)) => p == t,
        _ => false,
    }
}

/// Attribute inference accuracy of the synthetic table against sampled real
/// records.
pub fn aia_run(real: &Table, synth: &Table, cfg: &AiaConfig) -> Result<AiaReport> {
    let schema = real.schema();
    schema.ensure_same(synth.schema(), "AIA synthetic")?;
    let n_cols = schema.len();
    if real.is_empty() {
        return Err(Error::EmptyTable);
    }
    if cfg.k == 0 || cfg.k > synth.n_rows() {
        return Err(Error::KTooLarge {
            k: cfg.k,
            available: synth.n_rows(),
        });
    }
    if cfg.numeric_match_tolerance < 0.0 {
        return Err(Error::InvalidConfig(
            "numeric match tolerance must be non-negative".into(),
        ));
    }

    let n_attack = cfg
        .n_attack_records
        .unwrap_or_else(|| ((DEFAULT_ATTACK_SHARE * real.n_rows() as f64).round() as usize).min(DEFAULT_ATTACK_CAP))
        .clamp(1, real.n_rows());
    let mut attack_rows = index::sample(&mut stream_rng(cfg.seed, 0xa1a), real.n_rows(), n_attack).into_vec();
    attack_rows.sort_unstable();

    let qid_sets: Vec<Vec<usize>> = match &cfg.mode {
        QidMode::FixedQids(names) => {
            let mut qids = names.iter().map(|n| schema.index_of(n)).collect::<Result<Vec<_>>>()?;
            qids.sort_unstable();
            qids.dedup();
            if qids.is_empty() || qids.len() >= n_cols {
                return Err(Error::InvalidConfig(
                    "fixed quasi-identifiers must be a non-empty strict subset of the columns".into(),
                ));
            }
            vec![qids; n_attack]
        }
        QidMode::RandomQids(m) => {
            if *m == 0 || *m >= n_cols {
                return Err(Error::InvalidConfig(format!(
                    "random quasi-identifier count must lie in 1..{n_cols}, got {m}"
                )));
            }
            let mut rng = stream_rng(cfg.seed, 0xa1b);
            (0..n_attack)
                .map(|_| {
                    let mut q = index::sample(&mut rng, n_cols, *m).into_vec();
                    q.sort_unstable();
                    q
                })
                .collect()
        }
    };

    let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (j, q) in qid_sets.iter().enumerate() {
        groups.entry(q.as_slice()).or_default().push(j);
    }

    let stats = fit_encoder(real)?;
    let mut correct = vec![0usize; n_cols];
    let mut evaluated = vec![0usize; n_cols];
    for (qids, members) in groups {
        let synth_enc = encode_columns(synth, &stats, qids)?;
        let rows: Vec<usize> = members.iter().map(|&j| attack_rows[j]).collect();
        let attack = real.select(&rows);
        let attack_enc = encode_columns(&attack, &stats, qids)?;
        let nn = knn(&attack_enc, &synth_enc, cfg.k)?;
        for (a, truth) in attack.rows().iter().enumerate() {
            let neighbor_rows: Vec<&[Cell]> = nn.of(a).iter().map(|n| synth.row(n.index)).collect();
            let pred = aia_aggregate_neighbors(schema, &neighbor_rows)?;
            for c in (0..n_cols).filter(|c| !qids.contains(c)) {
                if truth[c].is_missing() {
                    continue;
                }
                evaluated[c] += 1;
                if is_correct(&pred[c], &truth[c], &stats.columns()[c], cfg.numeric_match_tolerance) {
                    correct[c] += 1;
                }
            }
        }
    }

    let mut entropies: HashMap<usize, f64> = HashMap::new();
    for c in (0..n_cols).filter(|&c| evaluated[c] > 0) {
        entropies.insert(c, column_entropy(real, &schema.columns()[c].name)?.entropy);
    }
    let total_entropy: f64 = (0..n_cols).filter_map(|c| entropies.get(&c)).sum();
    let per_column: Vec<AiaColumnResult> = (0..n_cols)
        .filter(|&c| evaluated[c] > 0)
        .map(|c| {
            let entropy = entropies[&c];
            AiaColumnResult {
                column: schema.columns()[c].name.clone(),
                accuracy: correct[c] as f64 / evaluated[c] as f64,
                n_evaluated: evaluated[c],
                entropy,
                entropy_weight: if total_entropy > 0.0 {
                    entropy / total_entropy
                } else {
                    0.0
                },
            }
        })
        .collect();
    let overall_unweighted = if per_column.is_empty() {
        0.0
    } else {
        per_column.iter().map(|c| c.accuracy).sum::<f64>() / per_column.len() as f64
    };
    let overall_entropy_weighted = per_column.iter().map(|c| c.accuracy * c.entropy_weight).sum();
    Ok(AiaReport {
        per_column,
        overall_unweighted,
        overall_entropy_weighted,
        n_attack_records: n_attack,
        k: cfg.k,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn schema() -> Schema {
        Schema::new(vec![Column::numeric("x"), Column::categorical("c")]).unwrap()
    }

    fn row(x: f64, c: &str) -> Vec<Cell> {
        vec![Cell::Num(x), Cell::Cat(c.into())]
    }

    #[test]
    fn aggregation_rules() {
        let a = row(1.0, "a");
        let b = row(2.0, "a");
        let c = row(3.0, "b");
        let pred = aia_aggregate_neighbors(&schema(), &[&a, &b, &c]).unwrap();
        assert_eq!(pred, vec![Cell::Num(2.0), Cell::Cat("a".into())]);

        let tie = aia_aggregate_neighbors(&schema(), &[&row(0.0, "b"), &row(0.0, "a")]).unwrap();
        assert_eq!(tie[1], Cell::Cat("a".into()));

        let missing = vec![Cell::Missing, Cell::Missing];
        let pred = aia_aggregate_neighbors(&schema(), &[&missing, &a]).unwrap();
        assert_eq!(pred, vec![Cell::Num(1.0), Cell::Cat("a".into())]);
        let pred = aia_aggregate_neighbors(&schema(), &[&missing]).unwrap();
        assert_eq!(pred, vec![Cell::Missing, Cell::Missing]);
        assert!(aia_aggregate_neighbors(&schema(), &[]).is_err());
    }

    fn sample_table() -> Table {
        Table::new(
            schema(),
            (0..40)
                .map(|i| row(i as f64, if i % 2 == 0 { "even" } else { "odd" }))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn copy_with_k1_is_exact() {
        let t = sample_table();
        let mut cfg = AiaConfig::new(QidMode::FixedQids(vec!["x".into()]));
        cfg.k = 1;
        cfg.n_attack_records = Some(40);
        let r = aia_run(&t, &t, &cfg).unwrap();
        assert_eq!(r.per_column.len(), 1);
        assert_eq!(r.per_column[0].accuracy, 1.0);
        assert_eq!(r.per_column[0].entropy_weight, 1.0);
    }

    #[test]
    fn invalid_configs() {
        let t = sample_table();
        let all = AiaConfig::new(QidMode::FixedQids(vec!["x".into(), "c".into()]));
        assert!(matches!(aia_run(&t, &t, &all), Err(Error::InvalidConfig(_))));
        let unknown = AiaConfig::new(QidMode::FixedQids(vec!["nope".into()]));
        assert!(matches!(aia_run(&t, &t, &unknown), Err(Error::UnknownColumn(_))));
        let mut big_k = AiaConfig::new(QidMode::FixedQids(vec!["x".into()]));
        big_k.k = 41;
        assert!(matches!(aia_run(&t, &t, &big_k), Err(Error::KTooLarge { .. })));
        let random_all = AiaConfig::new(QidMode::RandomQids(2));
        assert!(matches!(aia_run(&t, &t, &random_all), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn random_qids_cover_every_column() {
        let t = sample_table();
        let mut cfg = AiaConfig::new(QidMode::RandomQids(1));
        cfg.n_attack_records = Some(40);
        cfg.k = 1;
        let r = aia_run(&t, &t, &cfg).unwrap();
        assert_eq!(r.per_column.len(), 2);
        for c in &r.per_column {
            assert!((0.0..=1.0).contains(&c.accuracy));
        }
        let w: f64 = r.per_column.iter().map(|c| c.entropy_weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(r, aia_run(&t, &t, &cfg).unwrap());
    }
}
