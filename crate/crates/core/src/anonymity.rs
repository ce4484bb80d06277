//! k-anonymity and l-diversity over declared quasi-identifiers.
//!
//! Rows are grouped by the canonical rendering of their quasi-identifier
//! cells, so numeric quasi-identifiers group by exact value. Choosing the
//! quasi-identifiers is up to the caller; almost any field can act as one
//! when linked with outside data, so results are only as good as that
//! choice.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{row_key, Table};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiIdentifierSet {
    pub qid_columns: Vec<String>,
    #[serde(default)]
    pub sensitive_columns: Vec<String>,
}

impl QuasiIdentifierSet {
    pub fn new(qid_columns: Vec<String>, sensitive_columns: Vec<String>) -> Self {
        Self {
            qid_columns,
            sensitive_columns,
        }
    }

    /// Column indices of the quasi-identifiers and sensitive columns.
    fn resolve(&self, table: &Table) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.qid_columns.is_empty() {
            return Err(Error::InvalidConfig("at least one quasi-identifier is required".into()));
        }
        let schema = table.schema();
        let qids = self
            .qid_columns
            .iter()
            .map(|c| schema.index_of(c))
            .collect::<Result<Vec<_>>>()?;
        let sensitive = self
            .sensitive_columns
            .iter()
            .map(|c| schema.index_of(c))
            .collect::<Result<Vec<_>>>()?;
        if let Some(c) = self.sensitive_columns.iter().find(|c| self.qid_columns.contains(c)) {
            return Err(Error::InvalidConfig(format!(
                "column `{c}` cannot be both quasi-identifier and sensitive"
            )));
        }
        Ok((qids, sensitive))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymityResult {
    pub k: usize,
    pub n_classes: usize,
    /// Equivalence-class size to number of classes of that size.
    pub class_size_histogram: BTreeMap<usize, usize>,
    /// l-diversity per sensitive column.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub l: BTreeMap<String, usize>,
}

fn equivalence_classes(table: &Table, qids: &[usize]) -> HashMap<String, Vec<usize>> {
    let mut classes: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, row) in table.rows().iter().enumerate() {
        classes.entry(row_key(row, qids)).or_default().push(i);
    }
    classes
}

fn min_distinct(table: &Table, classes: &HashMap<String, Vec<usize>>, column: usize) -> usize {
    classes
        .values()
        .map(|rows| {
            rows.iter()
                .map(|&i| row_key(table.row(i), &[column]))
                .collect::<HashSet<_>>()
                .len()
        })
        .min()
        .unwrap_or(0)
}

/// Smallest equivalence class under the quasi-identifiers, plus the class
/// size histogram and l-diversity of every listed sensitive column.
pub fn k_anonymity(table: &Table, qids: &QuasiIdentifierSet) -> Result<AnonymityResult> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let (qid_idx, sensitive_idx) = qids.resolve(table)?;
    let classes = equivalence_classes(table, &qid_idx);
    let mut class_size_histogram = BTreeMap::new();
    for rows in classes.values() {
        *class_size_histogram.entry(rows.len()).or_insert(0) += 1;
    }
    let k = *class_size_histogram.keys().next().expect("non-empty table");
    let l = qids
        .sensitive_columns
        .iter()
        .zip(&sensitive_idx)
        .map(|(name, &c)| (name.clone(), min_distinct(table, &classes, c)))
        .collect();
    Ok(AnonymityResult {
        k,
        n_classes: classes.len(),
        class_size_histogram,
        l,
    })
}

/// Minimum number of distinct `sensitive` values over all equivalence classes.
pub fn l_diversity(table: &Table, qids: &QuasiIdentifierSet, sensitive: &str) -> Result<usize> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if qids.qid_columns.iter().any(|q| q == sensitive) {
        return Err(Error::InvalidConfig(format!(
            "sensitive column `{sensitive}` is a quasi-identifier"
        )));
    }
    let (qid_idx, _) = qids.resolve(table)?;
    let column = table.schema().index_of(sensitive)?;
    Ok(min_distinct(table, &equivalence_classes(table, &qid_idx), column))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Cell, Column, Schema};

    fn table(rows: &[(&str, &str)]) -> Table {
        let schema = Schema::new(vec![Column::categorical("q"), Column::categorical("s")]).unwrap();
        Table::new(
            schema,
            rows.iter()
                .map(|(q, s)| vec![Cell::Cat(q.to_string()), Cell::Cat(s.to_string())])
                .collect(),
        )
        .unwrap()
    }

    fn qset(sensitive: &[&str]) -> QuasiIdentifierSet {
        QuasiIdentifierSet::new(vec!["q".into()], sensitive.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn hand_grouped() {
        let t = table(&[("A", "x"), ("A", "y"), ("B", "x")]);
        let r = k_anonymity(&t, &qset(&[])).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.class_size_histogram, BTreeMap::from([(1, 1), (2, 1)]));
    }

    #[test]
    fn single_class() {
        let t = table(&[("A", "x"); 7]);
        let r = k_anonymity(&t, &qset(&["s"])).unwrap();
        assert_eq!(r.k, 7);
        assert_eq!(r.l["s"], 1);
    }

    #[test]
    fn l_cases() {
        let t = table(&[("A", "x"), ("A", "x")]);
        assert_eq!(l_diversity(&t, &qset(&[]), "s").unwrap(), 1);
        let t = table(&[("A", "x"), ("A", "y"), ("B", "x"), ("B", "z")]);
        assert!(l_diversity(&t, &qset(&[]), "s").unwrap() >= 2);
    }

    #[test]
    fn errors() {
        let t = table(&[("A", "x")]);
        assert!(matches!(
            k_anonymity(&t, &QuasiIdentifierSet::new(vec!["nope".into()], vec![])),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(l_diversity(&t, &qset(&[]), "q"), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            k_anonymity(&t, &QuasiIdentifierSet::default()),
            Err(Error::InvalidConfig(_))
        ));
        let empty = Table::empty(t.schema().clone());
        assert!(matches!(k_anonymity(&empty, &qset(&[])), Err(Error::EmptyTable)));
    }
}
