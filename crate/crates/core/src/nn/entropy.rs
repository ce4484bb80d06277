use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, ColumnKind, Table};
use crate::error::Result;
use crate::stats::quantile_sorted;

const MAX_BINS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnEntropy {
    pub column: String,
    /// Shannon entropy in bits.
    pub entropy: f64,
}

/// Number of equal-width bins for a numeric sample: Freedman-Diaconis capped
/// at 32, falling back to Sturges when the interquartile range is zero.
pub(crate) fn numeric_bins(sorted: &[f64]) -> usize {
    let n = sorted.len();
    if n < 2 {
        return 1;
    }
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return 1;
    }
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let bins = if iqr > 0.0 {
        let width = 2.0 * iqr / (n as f64).cbrt();
        (range / width).ceil()
    } else {
        (n as f64).log2().ceil() + 1.0
    };
    (bins as usize).clamp(1, MAX_BINS)
}

fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Empirical entropy of one column, ignoring missing cells. Numeric columns
/// are binned first.
pub fn column_entropy(table: &Table, column: &str) -> Result<ColumnEntropy> {
    let c = table.schema().index_of(column)?;
    let entropy = match table.schema().columns()[c].kind {
        ColumnKind::Categorical => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            let mut total = 0;
            for cell in table.column_values(c) {
                if let Cell::Cat(s) = cell {
                    *counts.entry(s.as_str()).or_default() += 1;
                    total += 1;
                }
            }
            let mut counts: Vec<usize> = counts.into_values().collect();
            counts.sort_unstable();
            entropy_of_counts(counts, total)
        }
        ColumnKind::Numeric => {
            let mut values: Vec<f64> = table.column_values(c).filter_map(Cell::as_num).collect();
            values.sort_by(f64::total_cmp);
            let bins = numeric_bins(&values);
            let mut counts = vec![0usize; bins];
            if let (Some(&lo), Some(&hi)) = (values.first(), values.last()) {
                let width = (hi - lo) / bins as f64;
                for &x in &values {
                    let b = if width > 0.0 {
                        (((x - lo) / width).floor() as usize).min(bins - 1)
                    } else {
                        0
                    };
                    counts[b] += 1;
                }
            }
            entropy_of_counts(counts, values.len())
        }
    };
    Ok(ColumnEntropy {
        column: column.to_string(),
        entropy,
    })
}
