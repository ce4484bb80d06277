//! Seeded reference generators for exercising the metrics.
//!
//! `sample_population` draws from a Gaussian mixture with categorical
//! columns; fresh draws from the same spec behave like an ideal generator.
//! `gen_copy`, `gen_perturb` and `gen_independent` stand in for a memorizing,
//! a noisy and a structure-destroying generator respectively.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Column, ColumnKind, Schema, Table};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const SUM_TOLERANCE: f64 = 1e-9;

/// Marginal sampler plus optional per-component samplers.
type CategoricalSampler = (WeightedIndex<f64>, Option<Vec<WeightedIndex<f64>>>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix.
    pub variance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    pub vocabulary: Vec<String>,
    pub probabilities: Vec<f64>,
    /// Optional per-component probabilities, overriding `probabilities`, to
    /// tie the column to the numeric mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_probabilities: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    #[serde(default)]
    pub components: Vec<MixtureComponent>,
    #[serde(default)]
    pub categorical_columns: Vec<CategoricalSpec>,
    pub n_rows: usize,
    #[serde(default)]
    pub seed: u64,
}

fn check_probabilities(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "{what}: probabilities must be finite and non-negative"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "{what}: probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

impl PopulationSpec {
    pub fn schema(&self) -> Result<Schema> {
        Schema::new(
            self.numeric_columns
                .iter()
                .map(|n| Column::numeric(n.clone()))
                .chain(
                    self.categorical_columns
                        .iter()
                        .map(|c| Column::categorical(c.name.clone())),
                )
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.schema()?;
        let n_num = self.numeric_columns.len();
        if self.components.is_empty()
            && (n_num > 0
                || self
                    .categorical_columns
                    .iter()
                    .any(|c| c.component_probabilities.is_some()))
        {
            return Err(Error::InvalidConfig(
                "at least one mixture component is required".into(),
            ));
        }
        if !self.components.is_empty() {
            check_probabilities(
                &self.components.iter().map(|c| c.weight).collect::<Vec<_>>(),
                "component weights",
            )?;
        }
        for (i, comp) in self.components.iter().enumerate() {
            if comp.mean.len() != n_num || comp.variance.len() != n_num {
                return Err(Error::InvalidConfig(format!(
                    "component {i}: mean and variance need {n_num} entries"
                )));
            }
            if comp.mean.iter().any(|m| !m.is_finite()) || comp.variance.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "component {i}: means must be finite and variances non-negative"
                )));
            }
        }
        for cat in &self.categorical_columns {
            if cat.vocabulary.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "column `{}` has an empty vocabulary",
                    cat.name
                )));
            }
            let mut sorted = cat.vocabulary.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != cat.vocabulary.len() {
                return Err(Error::InvalidConfig(format!(
                    "column `{}` repeats a category",
                    cat.name
                )));
            }
            let check = |p: &[f64]| {
                if p.len() != cat.vocabulary.len() {
                    return Err(Error::InvalidConfig(format!(
                        "column `{}`: probability vector length differs from vocabulary",
                        cat.name
                    )));
                }
                check_probabilities(p, &cat.name)
            };
            check(&cat.probabilities)?;
            if let Some(per) = &cat.component_probabilities {
                if per.len() != self.components.len() {
                    return Err(Error::InvalidConfig(format!(
                        "column `{}`: one probability vector per component is required",
                        cat.name
                    )));
                }
                per.iter().try_for_each(|p| check(p))?;
            }
        }
        Ok(())
    }
}

/// Seeded i.i.d. draws. Returns the table and the mixture component of each
/// row (0 when there are no components).
pub fn sample_population_labeled(spec: &PopulationSpec) -> Result<(Table, Vec<usize>)> {
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = stream_rng(spec.seed, 0xb0);
    let component_pick = if spec.components.is_empty() {
        None
    } else {
        Some(
            WeightedIndex::new(spec.components.iter().map(|c| c.weight))
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        )
    };
    let to_dist = |p: &[f64]| WeightedIndex::new(p.iter().copied()).map_err(|e| Error::InvalidConfig(e.to_string()));
    let categorical: Vec<CategoricalSampler> = spec
        .categorical_columns
        .iter()
        .map(|c| {
            let per = c
                .component_probabilities
                .as_ref()
                .map(|per| per.iter().map(|p| to_dist(p)).collect::<Result<Vec<_>>>())
                .transpose()?;
            Ok((to_dist(&c.probabilities)?, per))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.n_rows);
    let mut labels = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let comp = component_pick.as_ref().map_or(0, |d| d.sample(&mut rng));
        let mut row = Vec::with_capacity(schema.len());
        if let Some(c) = spec.components.get(comp) {
            for (m, v) in c.mean.iter().zip(&c.variance) {
                let x = if *v == 0.0 {
                    *m
                } else {
                    Normal::new(*m, v.sqrt())
                        .map_err(|e| Error::InvalidConfig(e.to_string()))?
                        .sample(&mut rng)
                };
                row.push(Cell::Num(x));
            }
        }
        for (cat, (marginal, per)) in spec.categorical_columns.iter().zip(&categorical) {
            let dist = per.as_ref().map_or(marginal, |p| &p[comp]);
            row.push(Cell::Cat(cat.vocabulary[dist.sample(&mut rng)].clone()));
        }
        rows.push(row);
        labels.push(comp);
    }
    Ok((Table::new(schema, rows)?, labels))
}

pub fn sample_population(spec: &PopulationSpec) -> Result<Table> {
    Ok(sample_population_labeled(spec)?.0)
}

/// The maximal-leak baseline: an exact copy.
pub fn gen_copy(train: &Table) -> Table {
    train.clone()
}

fn numeric_std(table: &Table, col: usize) -> f64 {
    let values: Vec<f64> = table.column_values(col).filter_map(Cell::as_num).collect();
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

fn categorical_marginal(table: &Table, col: usize) -> Option<(Vec<String>, WeightedIndex<usize>)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for cell in table.column_values(col) {
        if let Cell::Cat(s) = cell {
            *counts.entry(s).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return None;
    }
    let values = counts.keys().map(|s| s.to_string()).collect();
    let dist = WeightedIndex::new(counts.values().copied()).ok()?;
    Some((values, dist))
}

/// Adds Gaussian noise of `sigma` column standard deviations to numeric
/// cells and resamples categorical cells from their marginal with
/// probability `min(1, sigma)`. Missing cells stay missing.
pub fn gen_perturb(train: &Table, sigma: f64, seed: u64) -> Result<Table> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be a non-negative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(train.clone());
    }
    let schema = train.schema();
    let mut rng = stream_rng(seed, 0xb1);
    let stds: Vec<f64> = (0..schema.len()).map(|c| numeric_std(train, c)).collect();
    let marginals: Vec<_> = (0..schema.len()).map(|c| categorical_marginal(train, c)).collect();
    let resample_p = sigma.min(1.0);
    let rows = train
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, cell)| match (schema.columns()[c].kind, cell) {
                    (_, Cell::Missing) => Cell::Missing,
                    (ColumnKind::Numeric, Cell::Num(x)) => {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        Cell::Num(x + sigma * stds[c] * z)
                    }
                    (_, other) => {
                        if rng.random::<f64>() < resample_p {
                            let (values, dist) = marginals[c].as_ref().expect("column has a category");
                            Cell::Cat(values[dist.sample(&mut rng)].clone())
                        } else {
                            other.clone()
                        }
                    }
                })
                .collect()
        })
        .collect();
    Table::new(schema.clone(), rows)
}

/// Bootstraps every column independently: marginals survive, cross-column
/// structure does not.
pub fn gen_independent(train: &Table, seed: u64) -> Result<Table> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = train.n_rows();
    let n_cols = train.schema().len();
    let picks: Vec<Vec<usize>> = (0..n_cols)
        .map(|c| {
            let mut rng = stream_rng(seed, 0xb200 + c as u64);
            (0..n).map(|_| rng.random_range(0..n)).collect()
        })
        .collect();
    let rows = (0..n)
        .map(|i| (0..n_cols).map(|c| train.row(picks[c][i])[c].clone()).collect())
        .collect();
    Table::new(train.schema().clone(), rows)
}
