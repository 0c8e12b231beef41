//! Classifiers: a weighted-Gini decision tree, a random forest over it, and a
//! logistic scorer. All of them are fairness-agnostic; fairness enters only
//! through the data, weights, or wrappers they are given.

pub mod forest;
pub mod logistic;
pub mod matrix;
pub mod tree;

pub use forest::ForestParams;
pub use logistic::LogisticParams;
pub use matrix::{ColumnSpec, FeatureMatrix};
pub use tree::TreeParams;

use crate::data::{Dataset, Encoder};
use crate::error::Error;
use crate::metrics::Prediction;
use crate::scalar::Scalar;
use crate::Result;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tree,
    Forest,
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
enum ModelInner<S: Scalar> {
    Tree {
        manifest: Vec<ColumnSpec>,
        root: tree::Node<S>,
    },
    Forest {
        manifest: Vec<ColumnSpec>,
        trees: Vec<tree::Node<S>>,
    },
    Logistic {
        encoder: Encoder<S>,
        fit: logistic::LogisticFit<S>,
    },
}

/// An immutable fitted model. It remembers the ids it was fitted on (so test
/// isolation can be audited) and its feature manifest (so prediction rebuilds
/// compatible inputs from any view by feature name).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<S: Scalar> {
    pub fit_ids: Vec<u64>,
    inner: ModelInner<S>,
}

impl<S: Scalar> TrainedModel<S> {
    pub fn kind(&self) -> ModelKind {
        match &self.inner {
            ModelInner::Tree { .. } => ModelKind::Tree,
            ModelInner::Forest { .. } => ModelKind::Forest,
            ModelInner::Logistic { .. } => ModelKind::Logistic,
        }
    }

    /// True when the model saw the sensitive column during training.
    pub fn uses_sensitive_input(&self) -> bool {
        match &self.inner {
            ModelInner::Tree { manifest, .. } | ModelInner::Forest { manifest, .. } => {
                manifest.iter().any(|c| c.sensitive)
            }
            ModelInner::Logistic { encoder, .. } => encoder.include_sensitive,
        }
    }

    /// Scores the rows of `ds` with the given ids (ascending id order).
    pub fn predict(&self, ds: &Dataset<S>, ids: &BTreeSet<u64>) -> Result<Prediction<S>> {
        let scores: Vec<S> = match &self.inner {
            ModelInner::Tree { manifest, root } => {
                let m = FeatureMatrix::matching(ds, ids, manifest)?;
                (0..m.n()).map(|r| root.score_row(&m, r)).collect()
            }
            ModelInner::Forest { manifest, trees } => {
                let m = FeatureMatrix::matching(ds, ids, manifest)?;
                (0..m.n())
                    .map(|r| forest::forest_score_row(trees, &m, r))
                    .collect()
            }
            ModelInner::Logistic { encoder, fit } => {
                let m = encoder.transform(ds, ids)?;
                (0..m.n()).map(|r| fit.score_row(m.row(r))).collect()
            }
        };
        Prediction::from_scores(ids.iter().copied().collect(), scores)
    }

    /// Fraction of forest trees with at least one split on a sensitive
    /// column. Only meaningful for a forest that could see the sensitive
    /// column; anything else is an error.
    pub fn sensitive_usage(&self) -> Result<S> {
        let ModelInner::Forest { manifest, trees } = &self.inner else {
            return Err(Error::InvalidInput(
                "sensitive-attribute usage is defined only for forests".into(),
            ));
        };
        let sensitive_cols: Vec<usize> = manifest
            .iter()
            .enumerate()
            .filter(|(_, c)| c.sensitive)
            .map(|(i, _)| i)
            .collect();
        if sensitive_cols.is_empty() {
            return Err(Error::InvalidInput(
                "forest was trained without the sensitive column".into(),
            ));
        }
        let using = trees
            .iter()
            .filter(|t| sensitive_cols.iter().any(|&c| t.uses_column(c)))
            .count();
        Ok(S::from_usize(using).unwrap() / S::from_usize(trees.len()).unwrap())
    }

    /// Debug rendering of the fitted structure. Not a stable format.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        match &self.inner {
            ModelInner::Tree { manifest, root } => {
                out.push_str("tree\n");
                root.describe(manifest, 1, &mut out);
            }
            ModelInner::Forest { manifest, trees } => {
                out.push_str(&format!("forest n_trees={}\n", trees.len()));
                for (i, t) in trees.iter().enumerate() {
                    out.push_str(&format!("  tree {i}\n"));
                    t.describe(manifest, 2, &mut out);
                }
            }
            ModelInner::Logistic { encoder, fit } => {
                out.push_str(&format!(
                    "logistic intercept={}\n",
                    fit.intercept
                ));
                for (col, c) in encoder.columns().iter().zip(&fit.coef) {
                    out.push_str(&format!("  coef {}={c}\n", col.source));
                }
            }
        }
        out
    }
}

/// Fits a single tree on the given matrix.
pub fn fit_tree<S: Scalar>(
    m: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    params: &TreeParams,
    seed: u64,
) -> TrainedModel<S> {
    let root = tree::fit_tree_nodes(m, labels, weights, params, seed);
    TrainedModel {
        fit_ids: m.ids.clone(),
        inner: ModelInner::Tree {
            manifest: m.manifest(),
            root,
        },
    }
}

/// Fits a forest on the given matrix.
pub fn fit_forest<S: Scalar>(
    m: &FeatureMatrix<S>,
    labels: &[u8],
    weights: &[S],
    params: &ForestParams,
) -> TrainedModel<S> {
    let trees = forest::fit_forest_nodes(m, labels, weights, params);
    TrainedModel {
        fit_ids: m.ids.clone(),
        inner: ModelInner::Forest {
            manifest: m.manifest(),
            trees,
        },
    }
}

/// Fits a single tree on the rows of `ds` with the given ids.
pub fn fit_tree_on<S: Scalar>(
    ds: &Dataset<S>,
    ids: &BTreeSet<u64>,
    include_sensitive: bool,
    params: &TreeParams,
    seed: u64,
) -> Result<TrainedModel<S>> {
    let m = FeatureMatrix::from_dataset(ds, ids, include_sensitive)?;
    let (labels, weights) = matrix::labels_weights(ds, ids)?;
    Ok(fit_tree(&m, &labels, &weights, params, seed))
}

/// Fits a forest on the rows of `ds` with the given ids.
pub fn fit_forest_on<S: Scalar>(
    ds: &Dataset<S>,
    ids: &BTreeSet<u64>,
    include_sensitive: bool,
    params: &ForestParams,
) -> Result<TrainedModel<S>> {
    let m = FeatureMatrix::from_dataset(ds, ids, include_sensitive)?;
    let (labels, weights) = matrix::labels_weights(ds, ids)?;
    Ok(fit_forest(&m, &labels, &weights, params))
}

/// Fits the logistic scorer on the rows of `ds` with the given ids. The
/// encoder (standardization plus one-hot) is fitted on the same rows and kept
/// inside the model for prediction.
pub fn fit_logistic_on<S: Scalar>(
    ds: &Dataset<S>,
    ids: &BTreeSet<u64>,
    include_sensitive: bool,
    params: &LogisticParams,
) -> Result<TrainedModel<S>> {
    let encoder = Encoder::fit(ds, ids, include_sensitive)?;
    let m = encoder.transform(ds, ids)?;
    let (labels, weights) = matrix::labels_weights(ds, ids)?;
    let fit = logistic::fit_logistic_raw(&m, &labels, &weights, params)?;
    Ok(TrainedModel {
        fit_ids: ids.iter().copied().collect(),
        inner: ModelInner::Logistic { encoder, fit },
    })
}
