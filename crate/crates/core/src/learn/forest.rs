//! Random forest over the weighted Gini tree.
//!
//! Instance weights enter through the bootstrap: each tree's sample of
//! `n` rows is drawn with replacement with probability proportional to
//! weight, then fitted with the multiplicities as integer weights (the
//! weight-expansion equivalence makes that identical to fitting the
//! duplicated rows). Rescaling all weights by a common factor therefore
//! cannot change the forest.

use crate::learn::matrix::FeatureMatrix;
use crate::learn::tree::{grow, Node, TreeParams};
use crate::scalar::Scalar;
use crate::seeds;
use rand::distributions::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Forest shape and sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Candidate columns per split; `None` means `max(1, floor(sqrt(n)))`.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(n_trees: usize, seed: u64) -> Self {
        ForestParams {
            n_trees,
            tree: TreeParams::forest_member(),
            mtry: None,
            seed,
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams::new(100, 0)
    }
}

/// Draws one bootstrap sample (probability proportional to weight) and
/// returns per-row multiplicities.
fn bootstrap_counts<S: Scalar, R: Rng>(weights: &[S], rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = weights.iter().map(|v| v.to_f64_lossy()).collect();
    let dist = rand::distributions::WeightedIndex::new(&w)
        .expect("weights validated positive at dataset construction");
    let mut counts = vec![0.0f64; weights.len()];
    for _ in 0..weights.len() {
        counts[dist.sample(rng)] += 1.0;
    }
    counts
}

/// Fits the trees of a forest. Each tree draws its own bootstrap sample and,
/// at every node, a fresh column subset of size `mtry`.
pub fn fit_forest_nodes<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    params: &ForestParams,
) -> Vec<Node<S>> {
    let n_cols = matrix.n_columns();
    let mtry = params
        .mtry
        .unwrap_or_else(|| ((n_cols as f64).sqrt().floor() as usize).max(1))
        .clamp(1, n_cols);
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds::rng(seeds::mix(params.seed, t as u64));
            let counts = bootstrap_counts(weights, &mut rng);
            let rows: Vec<usize> = (0..matrix.n()).filter(|&r| counts[r] > 0.0).collect();
            let tree_weights: Vec<S> = counts.iter().map(|&c| S::from_f64_lossy(c)).collect();
            let mut sampler = || {
                if mtry >= n_cols {
                    return None;
                }
                let mut cols: Vec<usize> =
                    rand::seq::index::sample(&mut rng, n_cols, mtry).into_vec();
                cols.sort_unstable();
                Some(cols)
            };
            grow(
                matrix,
                labels,
                &tree_weights,
                &rows,
                0,
                &params.tree,
                &mut sampler,
            )
        })
        .collect()
}

/// Mean of the tree scores for one row, accumulated in tree-index order.
pub fn forest_score_row<S: Scalar>(trees: &[Node<S>], matrix: &FeatureMatrix<S>, row: usize) -> S {
    let total: S = trees.iter().map(|t| t.score_row(matrix, row)).sum();
    total / S::from_usize(trees.len()).unwrap()
}
