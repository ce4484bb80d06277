//! Embedding of mixed-type rows into one Euclidean space.
//!
//! Numeric columns are min-max scaled with statistics from the fitting table.
//! Values from other tables that land outside the fitted range are scaled by
//! the same formula and then clamped to `[-0.5, 1.5]`. Categorical columns
//! become one-hot blocks scaled by `1/sqrt(2)`, so a category mismatch costs
//! exactly 1.0 of squared distance, the same as a full-range numeric gap.
//! Missing numerics sit at 0.5; missing or unseen categories encode as an
//! all-zero block.

use serde::{Deserialize, Serialize};

use super::{Cell, ColumnKind, Schema, Table};
use crate::error::{Error, Result};

pub const CLAMP_LOW: f64 = -0.5;
pub const CLAMP_HIGH: f64 = 1.5;
pub const MISSING_NUMERIC: f64 = 0.5;

pub fn category_scale() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnStats {
    Numeric { min: f64, max: f64 },
    Categorical { vocabulary: Vec<String> },
}

impl ColumnStats {
    pub fn width(&self) -> usize {
        match self {
            ColumnStats::Numeric { .. } => 1,
            ColumnStats::Categorical { vocabulary } => vocabulary.len(),
        }
    }

    /// `max - min` for numeric columns, 0 otherwise.
    pub fn range(&self) -> f64 {
        match self {
            ColumnStats::Numeric { min, max } => max - min,
            ColumnStats::Categorical { .. } => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderStats {
    schema: Schema,
    columns: Vec<ColumnStats>,
}

impl EncoderStats {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnStats] {
        &self.columns
    }

    pub fn n_dims(&self) -> usize {
        self.columns.iter().map(ColumnStats::width).sum()
    }
}

/// Rows of a table embedded as a dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatrix {
    n_rows: usize,
    n_dims: usize,
    data: Vec<f64>,
    /// Numeric cells whose scaled value fell outside `[-0.5, 1.5]`.
    pub clamped_cells: usize,
    /// Numeric cells that were missing and placed at 0.5.
    pub missing_numeric_cells: usize,
}

impl EncodedMatrix {
    /// Builds a matrix from raw row-major data. No clamping is applied.
    pub fn from_rows(n_dims: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * n_dims);
        for row in rows {
            if row.len() != n_dims {
                return Err(Error::DimensionMismatch {
                    left: n_dims,
                    right: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("encoded values must be finite".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_dims,
            data,
            clamped_cells: 0,
            missing_numeric_cells: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Sub-matrix of the given rows in the given order. Clamp and missing
    /// counters are not carried over.
    pub fn select_rows(&self, indices: &[usize]) -> EncodedMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_dims);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EncodedMatrix {
            n_rows: indices.len(),
            n_dims: self.n_dims,
            data,
            clamped_cells: 0,
            missing_numeric_cells: 0,
        }
    }
}

/// Fits per-column scaling from a non-empty table.
pub fn fit_encoder(train: &Table) -> Result<EncoderStats> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let columns = train
        .schema()
        .columns()
        .iter()
        .enumerate()
        .map(|(c, col)| match col.kind {
            ColumnKind::Numeric => {
                let (min, max) = train
                    .column_values(c)
                    .filter_map(Cell::as_num)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                if min > max {
                    // all missing
                    ColumnStats::Numeric { min: 0.0, max: 0.0 }
                } else {
                    ColumnStats::Numeric { min, max }
                }
            }
            ColumnKind::Categorical => {
                let mut vocabulary: Vec<String> = train
                    .column_values(c)
                    .filter_map(|cell| match cell {
                        Cell::Cat(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect();
                vocabulary.sort_unstable();
                vocabulary.dedup();
                ColumnStats::Categorical { vocabulary }
            }
        })
        .collect();
    Ok(EncoderStats {
        schema: train.schema().clone(),
        columns,
    })
}

/// Encodes every column of `table`.
pub fn encode(table: &Table, stats: &EncoderStats) -> Result<EncodedMatrix> {
    let all: Vec<usize> = (0..stats.columns.len()).collect();
    encode_columns(table, stats, &all)
}

/// Encodes only the listed columns, in the listed order. Used for
/// quasi-identifier subspaces.
pub fn encode_columns(table: &Table, stats: &EncoderStats, columns: &[usize]) -> Result<EncodedMatrix> {
    table.schema().ensure_same(&stats.schema, "encode")?;
    if let Some(&bad) = columns.iter().find(|&&c| c >= stats.columns.len()) {
        return Err(Error::UnknownColumn(format!("#{bad}")));
    }
    let n_dims: usize = columns.iter().map(|&c| stats.columns[c].width()).sum();
    let scale = category_scale();
    let mut data = Vec::with_capacity(table.n_rows() * n_dims);
    let mut clamped = 0;
    let mut missing = 0;
    for row in table.rows() {
        for &c in columns {
            match (&stats.columns[c], &row[c]) {
                (ColumnStats::Numeric { .. }, Cell::Missing) => {
                    missing += 1;
                    data.push(MISSING_NUMERIC);
                }
                (ColumnStats::Numeric { min, max }, Cell::Num(x)) => {
                    if max > min {
                        let v = (x - min) / (max - min);
                        if !(CLAMP_LOW..=CLAMP_HIGH).contains(&v) {
                            clamped += 1;
                        }
                        data.push(v.clamp(CLAMP_LOW, CLAMP_HIGH));
                    } else {
                        data.push(0.5);
                    }
                }
                (ColumnStats::Categorical { vocabulary }, cell) => {
                    let hot = match cell {
                        Cell::Cat(s) => vocabulary.binary_search(s).ok(),
                        _ => None,
                    };
                    data.extend((0..vocabulary.len()).map(|j| if Some(j) == hot { scale } else { 0.0 }));
                }
                (ColumnStats::Numeric { .. }, Cell::Cat(_)) => unreachable!("schema checked"),
            }
        }
    }
    Ok(EncodedMatrix {
        n_rows: table.n_rows(),
        n_dims,
        data,
        clamped_cells: clamped,
        missing_numeric_cells: missing,
    })
}
