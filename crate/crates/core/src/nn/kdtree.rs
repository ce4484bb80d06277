//! Exact k-d tree over an [`EncodedMatrix`].
//!
//! Pruning uses only the squared offset to the splitting plane. Floating-point
//! subtraction, squaring and summation of non-negative terms are all monotone,
//! so that bound never exceeds the squared distance the brute-force scan
//! computes, and both paths see identical candidates and identical distances.

use super::{squared_distance, Candidates};
use crate::dataset::EncodedMatrix;

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug)]
pub struct KdTree<'a> {
    reference: &'a EncodedMatrix,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> KdTree<'a> {
    pub fn build(reference: &'a EncodedMatrix) -> Self {
        let mut tree = KdTree {
            reference,
            order: (0..reference.n_rows()).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        if reference.n_rows() > 0 {
            tree.root = tree.build_node(0, reference.n_rows());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let m = self.reference;
        let dims = m.n_dims();
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for d in 0..dims {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| m.row(i)[d])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            // every point in this range coincides
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mid = start + (end - start) / 2;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| m.row(a)[best_dim].total_cmp(&m.row(b)[best_dim]));
        let value = m.row(self.order[mid])[best_dim];
        // left holds coordinates <= value, right holds >= value
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes.push(Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    pub(super) fn search(&self, query: &[f64], skip: Option<usize>, out: &mut Candidates) {
        if self.reference.n_rows() > 0 {
            self.search_node(self.root, query, skip, out);
        }
    }

    fn search_node(&self, node: usize, query: &[f64], skip: Option<usize>, out: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) != skip {
                        out.offer(squared_distance(query, self.reference.row(i)), i);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search_node(near, query, skip, out);
                // ties at the bound are still visited so the index tie-break holds
                if !out.is_full() || diff * diff <= out.worst() {
                    self.search_node(far, query, skip, out);
                }
            }
        }
    }
}
