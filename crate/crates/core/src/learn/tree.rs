//! Weight-aware classification tree with greedy Gini splits.
//!
//! Splits minimize the weight-averaged child Gini impurity. A zero-gain split
//! is accepted (depth still bounds the recursion): problems like XOR have no
//! first split with positive gain, yet the standard greedy tree still solves
//! them by splitting through the plateau. Sample-count limits are weighted
//! masses, so duplicating a row and doubling its weight are the same thing.

use crate::learn::matrix::{FeatureMatrix, RawValues};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Limits for growing one tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum weighted mass a node needs to be considered for splitting.
    pub min_samples_split: f64,
    /// Minimum weighted mass each child of a split must keep.
    pub min_samples_leaf: f64,
}

impl TreeParams {
    /// Limits for a standalone tree.
    pub fn single() -> Self {
        TreeParams {
            max_depth: 6,
            min_samples_split: 2.0,
            min_samples_leaf: 1.0,
        }
    }

    /// Limits for the trees inside a forest.
    pub fn forest_member() -> Self {
        TreeParams {
            max_depth: 6,
            min_samples_split: 10.0,
            min_samples_leaf: 10.0,
        }
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams::single()
    }
}

/// Routing test of an internal node; rows passing it go left.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitTest<S> {
    /// value <= threshold
    NumericLe(S),
    /// code == category
    CategoryEq(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<S> {
    Leaf {
        /// Weighted positive fraction of the training rows that reached it.
        score: S,
    },
    Split {
        column: usize,
        test: SplitTest<S>,
        left: Box<Node<S>>,
        right: Box<Node<S>>,
    },
}

impl<S: Scalar> Node<S> {
    /// Score for row `row` of `matrix` (which must follow the training
    /// manifest's column order).
    pub fn score_row(&self, matrix: &FeatureMatrix<S>, row: usize) -> S {
        match self {
            Node::Leaf { score } => *score,
            Node::Split {
                column,
                test,
                left,
                right,
            } => {
                let goes_left = match (test, &matrix.columns[*column].values) {
                    (SplitTest::NumericLe(t), RawValues::Numeric(v)) => v[row] <= *t,
                    (SplitTest::CategoryEq(c), RawValues::Categorical(codes)) => codes[row] == *c,
                    // Manifest checking at matrix-build time rules this out.
                    _ => unreachable!("split test and column kind disagree"),
                };
                if goes_left {
                    left.score_row(matrix, row)
                } else {
                    right.score_row(matrix, row)
                }
            }
        }
    }

    /// True if any split in the subtree tests `column`.
    pub fn uses_column(&self, column: usize) -> bool {
        match self {
            Node::Leaf { .. } => false,
            Node::Split {
                column: c,
                left,
                right,
                ..
            } => *c == column || left.uses_column(column) || right.uses_column(column),
        }
    }

    pub fn describe(&self, manifest: &[crate::learn::matrix::ColumnSpec], indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match self {
            Node::Leaf { score } => {
                out.push_str(&format!("{pad}leaf score={score}\n"));
            }
            Node::Split {
                column,
                test,
                left,
                right,
            } => {
                let name = &manifest[*column].name;
                match test {
                    SplitTest::NumericLe(t) => out.push_str(&format!("{pad}split {name} <= {t}\n")),
                    SplitTest::CategoryEq(c) => {
                        out.push_str(&format!("{pad}split {name} == category {c}\n"))
                    }
                }
                left.describe(manifest, indent + 1, out);
                right.describe(manifest, indent + 1, out);
            }
        }
    }
}

/// Weighted-average child Gini impurity of a two-way split, times nothing:
/// lower is better. `w`/`p` are total and positive weighted masses.
fn split_cost<S: Scalar>(w_l: S, p_l: S, w_r: S, p_r: S) -> S {
    let gini = |w: S, p: S| -> S {
        if w <= S::zero() {
            return S::zero();
        }
        let fp = p / w;
        let fq = S::one() - fp;
        S::one() - fp * fp - fq * fq
    };
    let total = w_l + w_r;
    (w_l * gini(w_l, p_l) + w_r * gini(w_r, p_r)) / total
}

struct Candidate<S> {
    cost: S,
    column: usize,
    test: SplitTest<S>,
}

/// Best admissible split among `columns` for the node rows, or `None`.
/// Ties go to the lowest column index, then the lowest threshold, realized by
/// scanning columns ascending and thresholds ascending with a strict
/// improvement requirement.
fn best_split<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    rows: &[usize],
    columns: &[usize],
    min_leaf: S,
) -> Option<Candidate<S>> {
    let mut best: Option<Candidate<S>> = None;
    let mut consider = |cost: S, column: usize, test: SplitTest<S>| {
        let better = match &best {
            None => true,
            Some(b) => cost < b.cost,
        };
        if better {
            best = Some(Candidate { cost, column, test });
        }
    };
    for &col in columns {
        match &matrix.columns[col].values {
            RawValues::Numeric(values) => {
                let mut sorted: Vec<(S, S, S)> = rows
                    .iter()
                    .map(|&r| {
                        let w = weights[r];
                        let p = if labels[r] == 1 { w } else { S::zero() };
                        (values[r], w, p)
                    })
                    .collect();
                sorted.sort_by(|a, b| a.0.cmp_total(&b.0));
                let total_w: S = sorted.iter().map(|t| t.1).sum();
                let total_p: S = sorted.iter().map(|t| t.2).sum();
                let mut w_l = S::zero();
                let mut p_l = S::zero();
                for i in 0..sorted.len().saturating_sub(1) {
                    w_l += sorted[i].1;
                    p_l += sorted[i].2;
                    if sorted[i].0 == sorted[i + 1].0 {
                        continue;
                    }
                    let w_r = total_w - w_l;
                    let p_r = total_p - p_l;
                    if w_l < min_leaf || w_r < min_leaf {
                        continue;
                    }
                    consider(
                        split_cost(w_l, p_l, w_r, p_r),
                        col,
                        // The threshold is the last value on the left, so
                        // routing by <= reproduces this exact partition.
                        SplitTest::NumericLe(sorted[i].0),
                    );
                }
            }
            RawValues::Categorical(codes) => {
                let mut mass: std::collections::BTreeMap<u32, (S, S)> =
                    std::collections::BTreeMap::new();
                let mut total_w = S::zero();
                let mut total_p = S::zero();
                for &r in rows {
                    let w = weights[r];
                    let p = if labels[r] == 1 { w } else { S::zero() };
                    let e = mass.entry(codes[r]).or_insert((S::zero(), S::zero()));
                    e.0 += w;
                    e.1 += p;
                    total_w += w;
                    total_p += p;
                }
                if mass.len() < 2 {
                    continue;
                }
                for (&code, &(w_l, p_l)) in &mass {
                    let w_r = total_w - w_l;
                    let p_r = total_p - p_l;
                    if w_l < min_leaf || w_r < min_leaf {
                        continue;
                    }
                    consider(split_cost(w_l, p_l, w_r, p_r), col, SplitTest::CategoryEq(code));
                }
            }
        }
    }
    best
}

/// Grows a tree over `rows`. `column_sampler` picks the candidate columns for
/// each node (ascending order expected); `None` means all columns.
pub(crate) fn grow<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    rows: &[usize],
    depth: usize,
    params: &TreeParams,
    column_sampler: &mut dyn FnMut() -> Option<Vec<usize>>,
) -> Node<S> {
    let w_total: S = rows.iter().map(|&r| weights[r]).sum();
    let p_total: S = rows
        .iter()
        .filter(|&&r| labels[r] == 1)
        .map(|&r| weights[r])
        .sum();
    let leaf = || Node::Leaf {
        score: p_total / w_total,
    };
    let pure = rows.iter().all(|&r| labels[r] == labels[rows[0]]);
    if pure
        || depth >= params.max_depth
        || w_total < S::from_f64_lossy(params.min_samples_split)
    {
        return leaf();
    }
    let all_columns: Vec<usize>;
    let columns: Vec<usize> = match column_sampler() {
        Some(subset) => subset,
        None => {
            all_columns = (0..matrix.n_columns()).collect();
            all_columns
        }
    };
    let min_leaf = S::from_f64_lossy(params.min_samples_leaf);
    let Some(cand) = best_split(matrix, labels, weights, rows, &columns, min_leaf) else {
        return leaf();
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
        match (&cand.test, &matrix.columns[cand.column].values) {
            (SplitTest::NumericLe(t), RawValues::Numeric(v)) => v[r] <= *t,
            (SplitTest::CategoryEq(c), RawValues::Categorical(codes)) => codes[r] == *c,
            _ => unreachable!(),
        }
    });
    let left = grow(matrix, labels, weights, &left_rows, depth + 1, params, column_sampler);
    let right = grow(matrix, labels, weights, &right_rows, depth + 1, params, column_sampler);
    Node::Split {
        column: cand.column,
        test: cand.test,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Fits one tree on all rows of the matrix. The `_seed` parameter keeps the
/// signature uniform with the stochastic learners; a single tree has no
/// random component.
pub fn fit_tree_nodes<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    params: &TreeParams,
    _seed: u64,
) -> Node<S> {
    let rows: Vec<usize> = (0..matrix.n()).collect();
    grow(matrix, labels, weights, &rows, 0, params, &mut || None)
}
