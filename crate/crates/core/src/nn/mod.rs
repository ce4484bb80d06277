//! Exact Euclidean k-nearest-neighbor search over encoded matrices.
//!
//! Two interchangeable paths exist: a brute-force scan and a k-d tree. They
//! share the squared-distance kernel and the candidate ordering `(squared
//! distance, reference index)`, so their outputs are identical, ties
//! included. Equal distances resolve to the smaller reference index.

mod entropy;
mod kdtree;

use rayon::prelude::*;

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};

pub use entropy::{column_entropy, ColumnEntropy};
pub use kdtree::KdTree;

/// Above this dimensionality the tree rarely prunes, so `Auto` scans instead.
const TREE_MAX_DIMS: usize = 24;
const TREE_MIN_ROWS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchPath {
    BruteForce,
    Tree,
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// `k` neighbors per query row, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborResult {
    k: usize,
    neighbors: Vec<Neighbor>,
}

impl NeighborResult {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_queries(&self) -> usize {
        self.neighbors.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn of(&self, query: usize) -> &[Neighbor] {
        &self.neighbors[query * self.k..(query + 1) * self.k]
    }

    /// Distance from each query to its `rank`-th neighbor (0-based).
    pub fn distances_at(&self, rank: usize) -> Vec<f64> {
        assert!(rank < self.k);
        self.neighbors.chunks(self.k).map(|c| c[rank].distance).collect()
    }

    pub fn nearest_distances(&self) -> Vec<f64> {
        self.distances_at(0)
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Bounded sorted list of the best `(squared distance, index)` pairs.
pub(crate) struct Candidates {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn is_full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    #[inline]
    fn offer(&mut self, d2: f64, index: usize) {
        let key = (d2, index);
        if self.is_full() {
            let last = self.items[self.k - 1];
            if !less(key, last) {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&c| less(c, key));
        self.items.insert(pos, key);
    }
}

#[inline]
fn less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn check(queries: &EncodedMatrix, reference: &EncodedMatrix, k: usize, available: usize) -> Result<()> {
    if queries.n_dims() != reference.n_dims() {
        return Err(Error::DimensionMismatch {
            left: queries.n_dims(),
            right: reference.n_dims(),
        });
    }
    if k == 0 || k > available {
        return Err(Error::KTooLarge { k, available });
    }
    Ok(())
}

fn run(
    queries: &EncodedMatrix,
    reference: &EncodedMatrix,
    k: usize,
    exclude_self: bool,
    path: SearchPath,
) -> NeighborResult {
    let use_tree = match path {
        SearchPath::BruteForce => false,
        SearchPath::Tree => true,
        SearchPath::Auto => reference.n_dims() <= TREE_MAX_DIMS && reference.n_rows() >= TREE_MIN_ROWS,
    };
    let tree = use_tree.then(|| KdTree::build(reference));
    let per_query: Vec<Vec<Neighbor>> = (0..queries.n_rows())
        .into_par_iter()
        .map(|q| {
            let query = queries.row(q);
            let skip = exclude_self.then_some(q);
            let mut cand = Candidates::new(k);
            match &tree {
                Some(tree) => tree.search(query, skip, &mut cand),
                None => {
                    for (i, row) in reference.rows().enumerate() {
                        if Some(i) != skip {
                            cand.offer(squared_distance(query, row), i);
                        }
                    }
                }
            }
            cand.items
                .into_iter()
                .map(|(d2, index)| Neighbor {
                    index,
                    distance: d2.sqrt(),
                })
                .collect()
        })
        .collect();
    NeighborResult {
        k,
        neighbors: per_query.into_iter().flatten().collect(),
    }
}

/// Exact k nearest rows of `reference` for every row of `queries`.
pub fn knn(queries: &EncodedMatrix, reference: &EncodedMatrix, k: usize) -> Result<NeighborResult> {
    knn_with(queries, reference, k, SearchPath::Auto)
}

pub fn knn_with(
    queries: &EncodedMatrix,
    reference: &EncodedMatrix,
    k: usize,
    path: SearchPath,
) -> Result<NeighborResult> {
    check(queries, reference, k, reference.n_rows())?;
    Ok(run(queries, reference, k, false, path))
}

/// Self-query of a matrix against itself; with `exclude_self` a row never
/// counts as its own neighbor (duplicates of it still do).
pub fn knn_within(matrix: &EncodedMatrix, k: usize, exclude_self: bool) -> Result<NeighborResult> {
    knn_within_with(matrix, k, exclude_self, SearchPath::Auto)
}

pub fn knn_within_with(
    matrix: &EncodedMatrix,
    k: usize,
    exclude_self: bool,
    path: SearchPath,
) -> Result<NeighborResult> {
    let available = matrix.n_rows().saturating_sub(usize::from(exclude_self));
    check(matrix, matrix, k, available)?;
    Ok(run(matrix, matrix, k, exclude_self, path))
}
