#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use synthpriv::baselines::{sample_population, CategoricalSpec, MixtureComponent, PopulationSpec};
use synthpriv::dataset::{encode, fit_encoder, Cell, Column, EncodedMatrix, Schema, Table};
use synthpriv::nn::NeighborResult;

/// Two-component mixture over three numeric columns plus one categorical
/// column whose distribution depends on the component.
pub fn mixture_spec(n_rows: usize, seed: u64) -> PopulationSpec {
    PopulationSpec {
        numeric_columns: vec!["a".into(), "b".into(), "c".into()],
        components: vec![
            MixtureComponent {
                weight: 0.6,
                mean: vec![0.0, 0.0, 0.0],
                variance: vec![1.0, 1.0, 1.0],
            },
            MixtureComponent {
                weight: 0.4,
                mean: vec![3.0, -2.0, 1.0],
                variance: vec![0.5, 2.0, 1.0],
            },
        ],
        categorical_columns: vec![CategoricalSpec {
            name: "group".into(),
            vocabulary: vec!["g1".into(), "g2".into(), "g3".into()],
            probabilities: vec![0.4, 0.3, 0.3],
            component_probabilities: Some(vec![vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6]]),
        }],
        n_rows,
        seed,
    }
}

pub fn draw(n_rows: usize, seed: u64) -> Table {
    sample_population(&mixture_spec(n_rows, seed)).unwrap()
}

/// Encodes every table with an encoder fitted on the first one.
pub fn encode_with_first(tables: &[&Table]) -> Vec<EncodedMatrix> {
    let stats = fit_encoder(tables[0]).unwrap();
    tables.iter().map(|t| encode(t, &stats).unwrap()).collect()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn brute_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y) * (x - y);
    }
    acc
}

/// Sorted `(index, distance)` lists by full scan.
pub fn brute_knn(q: &EncodedMatrix, r: &EncodedMatrix, k: usize, exclude_self: bool) -> Vec<Vec<(usize, f64)>> {
    (0..q.n_rows())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..r.n_rows())
                .filter(|&j| !(exclude_self && i == j))
                .map(|j| (brute_sq(q.row(i), r.row(j)), j))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(d, j)| (j, d.sqrt())).collect()
        })
        .collect()
}

pub fn as_pairs(res: &NeighborResult) -> Vec<Vec<(usize, f64)>> {
    (0..res.n_queries())
        .map(|q| res.of(q).iter().map(|n| (n.index, n.distance)).collect())
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, dims: usize, quantized: bool) -> EncodedMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dims)
                .map(|_| {
                    if quantized {
                        rng.random_range(0..4) as f64 * 0.25
                    } else {
                        rng.random_range(-0.5..1.5)
                    }
                })
                .collect()
        })
        .collect();
    EncodedMatrix::from_rows(dims, &rows).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, n: usize) -> Table {
    let schema = Schema::new(vec![
        Column::categorical("zip"),
        Column::numeric("age"),
        Column::categorical("sex"),
        Column::categorical("diagnosis"),
        Column::numeric("score"),
    ])
    .unwrap();
    let rows = (0..n)
        .map(|_| {
            let zip = if rng.random_bool(0.02) {
                Cell::Missing
            } else {
                Cell::Cat(format!("z{}", rng.random_range(0..12)))
            };
            vec![
                zip,
                Cell::Num(rng.random_range(18..30) as f64),
                Cell::Cat(["f", "m"][rng.random_range(0..2)].into()),
                Cell::Cat(format!("d{}", rng.random_range(0..5))),
                Cell::Num(rng.random_range(0..7) as f64 * 0.5),
            ]
        })
        .collect();
    Table::new(schema, rows).unwrap()
}

/// Sort by the QID tuple and scan runs of equal keys.
pub fn group_by_oracle(
    table: &Table,
    qids: &[usize],
    sensitive: &[usize],
) -> (usize, usize, BTreeMap<usize, usize>, Vec<usize>) {
    let key = |row: &[Cell]| -> Vec<String> {
        qids.iter()
            .map(|&c| match &row[c] {
                Cell::Missing => "<missing>".to_string(),
                Cell::Num(x) => format!("n{x:?}"),
                Cell::Cat(s) => format!("c{s}"),
            })
            .collect()
    };
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    order.sort_by_key(|&i| key(table.row(i)));
    let mut histogram = BTreeMap::new();
    let mut l = vec![usize::MAX; sensitive.len()];
    let mut start = 0;
    while start < order.len() {
        let k0 = key(table.row(order[start]));
        let mut end = start;
        while end < order.len() && key(table.row(order[end])) == k0 {
            end += 1;
        }
        *histogram.entry(end - start).or_insert(0) += 1;
        for (s, &col) in sensitive.iter().enumerate() {
            let distinct: HashSet<String> = order[start..end]
                .iter()
                .map(|&i| format!("{:?}", table.row(i)[col]))
                .collect();
            l[s] = l[s].min(distinct.len());
        }
        start = end;
    }
    let k = *histogram.keys().next().unwrap();
    let n_classes = histogram.values().sum();
    (k, n_classes, histogram, l)
}

/// Tree, scan and automatic searches against the full-scan oracle on
/// `instances` random problems, a third of them on a coarse grid to force
/// distance ties.
pub fn knn_sweep(seed: u64, instances: usize) -> Result<(), String> {
    use synthpriv::nn::{knn_with, knn_within_with, SearchPath};
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    for instance in 0..instances {
        let dims = rng.random_range(1..=10);
        let n_ref = rng.random_range(2..=260);
        let n_q = rng.random_range(1..=40);
        let quantized = instance % 3 == 0;
        let reference = random_matrix(&mut rng, n_ref, dims, quantized);
        let queries = random_matrix(&mut rng, n_q, dims, quantized);
        let k = rng.random_range(1..=n_ref.min(6));
        let expected = brute_knn(&queries, &reference, k, false);
        for path in [SearchPath::Tree, SearchPath::BruteForce, SearchPath::Auto] {
            let got = knn_with(&queries, &reference, k, path).map_err(|e| e.to_string())?;
            if as_pairs(&got) != expected {
                return Err(format!("instance {instance} differs on {path:?}"));
            }
        }
        let k_self = rng.random_range(1..=(n_ref - 1).min(6));
        let expected_self = brute_knn(&reference, &reference, k_self, true);
        for path in [SearchPath::Tree, SearchPath::BruteForce] {
            let got = knn_within_with(&reference, k_self, true, path).map_err(|e| e.to_string())?;
            if as_pairs(&got) != expected_self {
                return Err(format!("instance {instance} differs on self-excluded {path:?}"));
            }
        }
    }
    Ok(())
}

/// k-anonymity and l-diversity against the sort-and-scan oracle on three
/// 10 000-row tables with different quasi-identifier sets.
pub fn anonymity_sweep(seed: u64) -> Result<(), String> {
    use synthpriv::anonymity::{k_anonymity, l_diversity, QuasiIdentifierSet};
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    for qid_names in [vec!["zip", "age", "sex"], vec!["zip"], vec!["age", "score"]] {
        let table = random_table(&mut rng, 10_000);
        let schema = table.schema();
        let sensitive: Vec<&str> = ["diagnosis", "score", "sex"]
            .into_iter()
            .filter(|s| !qid_names.contains(s))
            .collect();
        let q_idx: Vec<usize> = qid_names.iter().map(|q| schema.index_of(q).unwrap()).collect();
        let s_idx: Vec<usize> = sensitive.iter().map(|s| schema.index_of(s).unwrap()).collect();
        let set = QuasiIdentifierSet::new(
            qid_names.iter().map(|s| s.to_string()).collect(),
            sensitive.iter().map(|s| s.to_string()).collect(),
        );
        let got = k_anonymity(&table, &set).map_err(|e| e.to_string())?;
        let (k, n_classes, hist, l) = group_by_oracle(&table, &q_idx, &s_idx);
        if (got.k, got.n_classes, &got.class_size_histogram) != (k, n_classes, &hist) {
            return Err(format!("k-anonymity differs for {qid_names:?}"));
        }
        for (name, expected) in sensitive.iter().zip(&l) {
            let direct = l_diversity(&table, &set, name).map_err(|e| e.to_string())?;
            if got.l[*name] != *expected || direct != *expected {
                return Err(format!("l-diversity of {name} differs for {qid_names:?}"));
            }
        }
    }
    Ok(())
}
