//! Canonical in-memory dataset representation, fold planning, and feature
//! encoding.

mod dataset;
mod encode;
mod folds;

pub use dataset::{Dataset, Feature, FeatureData};
pub use encode::{EncodedColumn, EncodedKind, EncodedMatrix, Encoder};
pub use folds::{make_fold_plan, FoldPlan};
