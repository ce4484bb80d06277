//! Tabular data: schemas, canonical cells, holdout splitting and deduplication.
//!
//! Everything downstream compares rows either by their canonical rendering
//! (exact-match metrics, k-anonymity) or through the shared encoded metric
//! space built in [`encode`].

mod csv_io;
pub mod encode;

use std::collections::HashSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub use csv_io::{load_csv, write_csv, CsvOptions};
pub use encode::{
    encode, encode_columns, fit_encoder, ColumnStats, EncodedMatrix, EncoderStats, CLAMP_HIGH, CLAMP_LOW,
    MISSING_NUMERIC,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
        }
    }
}

/// Ordered column list. Names are unique and non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidSchema("at least one column is required".into()));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.trim().is_empty() {
                return Err(Error::InvalidSchema("column names must be non-empty".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn ensure_same(&self, other: &Schema, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::SchemaMismatch(format!(
                "{what}: [{}] vs [{}]",
                self.names().collect::<Vec<_>>().join(","),
                other.names().collect::<Vec<_>>().join(",")
            )));
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            columns: Vec<Column>,
        }
        let raw = Raw::deserialize(d)?;
        Schema::new(raw.columns).map_err(serde::de::Error::custom)
    }
}

/// A single table cell. Numeric cells are always finite.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Missing,
    Num(f64),
    Cat(String),
}

/// Shortest round-trip rendering with `-0` folded into `0`, so `1.0` and
/// `1.00` share one canonical form.
pub fn canonical_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}

impl Cell {
    /// Canonical text form used for exact comparisons and CSV output.
    /// Missing cells render as the empty string.
    pub fn canonical(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Num(x) => canonical_number(*x),
            Cell::Cat(s) => s.clone(),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

// Unit separator keeps multi-cell keys unambiguous; NUL marks a missing cell
// so it never collides with an empty categorical string.
fn push_key(key: &mut String, cell: &Cell) {
    match cell {
        Cell::Missing => key.push('\u{0}'),
        other => key.push_str(&other.canonical()),
    }
    key.push('\u{1f}');
}

/// Canonical key of the selected cells of a row.
pub fn row_key(row: &[Cell], columns: &[usize]) -> String {
    let mut key = String::new();
    for &c in columns {
        push_key(&mut key, &row[c]);
    }
    key
}

/// Canonical key of a full row.
pub fn full_row_key(row: &[Cell]) -> String {
    let mut key = String::new();
    for cell in row {
        push_key(&mut key, cell);
    }
    key
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Vec<Cell>>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {r} has {} cells, schema has {} columns",
                    row.len(),
                    schema.len()
                )));
            }
            for (cell, col) in row.iter().zip(schema.columns()) {
                let ok = match (cell, col.kind) {
                    (Cell::Missing, _) => true,
                    (Cell::Num(x), ColumnKind::Numeric) => x.is_finite(),
                    (Cell::Cat(_), ColumnKind::Categorical) => true,
                    _ => false,
                };
                if !ok {
                    return Err(Error::NotNumeric {
                        column: col.name.clone(),
                        row: r,
                        value: cell.canonical(),
                    });
                }
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<Vec<Cell>> {
        self.rows
    }

    /// New table with the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn column_values(&self, col: usize) -> impl Iterator<Item = &Cell> {
        self.rows.iter().map(move |r| &r[col])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.05,
            seed: 0,
        }
    }
}

/// Row indices of a seeded train/holdout partition, each sorted ascending.
pub fn split_indices(n: usize, cfg: SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction must lie in (0,1), got {}",
            cfg.holdout_fraction
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientRows(format!(
            "holdout split needs at least 2 rows, table has {n}"
        )));
    }
    let n_holdout = ((cfg.holdout_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = stream_rng(cfg.seed, 0x5917);
    let mut holdout = index::sample(&mut rng, n, n_holdout).into_vec();
    holdout.sort_unstable();
    let mut in_holdout = vec![false; n];
    for &i in &holdout {
        in_holdout[i] = true;
    }
    let train = (0..n).filter(|&i| !in_holdout[i]).collect();
    Ok((train, holdout))
}

/// Seeded disjoint train/holdout partition. Rows keep their original order.
pub fn split_holdout(table: &Table, cfg: SplitConfig) -> Result<(Table, Table)> {
    let (train, holdout) = split_indices(table.n_rows(), cfg)?;
    Ok((table.select(&train), table.select(&holdout)))
}

/// Drops repeated full-row tuples, keeping first occurrences in order.
pub fn dedup_exact(table: &Table) -> (Table, usize) {
    let mut seen = HashSet::with_capacity(table.n_rows());
    let rows: Vec<Vec<Cell>> = table
        .rows
        .iter()
        .filter(|r| seen.insert(full_row_key(r)))
        .cloned()
        .collect();
    let removed = table.n_rows() - rows.len();
    (
        Table {
            schema: table.schema.clone(),
            rows,
        },
        removed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(rows: &[(&str, f64)]) -> Table {
        let schema = Schema::new(vec![Column::categorical("c"), Column::numeric("x")]).unwrap();
        Table::new(
            schema,
            rows.iter()
                .map(|(c, x)| vec![Cell::Cat(c.to_string()), Cell::Num(*x)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        assert!(Schema::new(vec![]).is_err());
        assert!(Schema::new(vec![Column::numeric("a"), Column::numeric("a")]).is_err());
        assert!(Schema::new(vec![Column::numeric(" ")]).is_err());
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(canonical_number(1.0), "1");
        assert_eq!(canonical_number("1.00".parse().unwrap()), "1");
        assert_eq!(canonical_number(-0.0), "0");
        assert_eq!(canonical_number(0.1), "0.1");
    }

    #[test]
    fn split_sizes() {
        let t = tiny(&(0..100).map(|i| ("a", i as f64)).collect::<Vec<_>>());
        let (train, holdout) = split_holdout(
            &t,
            SplitConfig {
                holdout_fraction: 0.05,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(train.n_rows(), 95);
        assert_eq!(holdout.n_rows(), 5);

        let (ti, hi) = split_indices(
            100,
            SplitConfig {
                holdout_fraction: 0.05,
                seed: 7,
            },
        )
        .unwrap();
        assert!(hi.iter().all(|h| !ti.contains(h)));
        assert_eq!(ti.len() + hi.len(), 100);
        let again = split_indices(
            100,
            SplitConfig {
                holdout_fraction: 0.05,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!((ti, hi), again);
    }

    #[test]
    fn split_clamps_small_tables() {
        let t = tiny(&[("a", 1.0), ("b", 2.0)]);
        let (train, holdout) = split_holdout(
            &t,
            SplitConfig {
                holdout_fraction: 0.05,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((train.n_rows(), holdout.n_rows()), (1, 1));
        let one = tiny(&[("a", 1.0)]);
        assert!(matches!(
            split_holdout(&one, SplitConfig::default()),
            Err(Error::InsufficientRows(_))
        ));
    }

    #[test]
    fn dedup_keeps_first() {
        let t = tiny(&[("a", 1.0), ("a", 1.0), ("b", 2.0)]);
        let (d, removed) = dedup_exact(&t);
        assert_eq!(removed, 1);
        assert_eq!(d.rows(), &t.rows()[1..]);

        let distinct = tiny(&[("a", 1.0), ("b", 2.0)]);
        let (same, removed) = dedup_exact(&distinct);
        assert_eq!(removed, 0);
        assert_eq!(same, distinct);
    }

    #[test]
    fn missing_key_differs_from_empty_string() {
        let a = vec![Cell::Missing];
        let b = vec![Cell::Cat(String::new())];
        assert_ne!(full_row_key(&a), full_row_key(&b));
    }
}
