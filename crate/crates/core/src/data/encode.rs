//! Feature encoding for distance computations and the linear model: numeric
//! columns standardized with training statistics, categorical columns one-hot
//! over training-observed categories.

use crate::data::dataset::{Dataset, FeatureData};
use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;
use std::collections::BTreeSet;

/// What an encoded column was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodedKind {
    Numeric,
    OneHot { category: String },
}

/// Manifest entry for one encoded column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedColumn {
    pub source: String,
    pub kind: EncodedKind,
    pub sensitive: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnStats<S> {
    Numeric {
        feature_index: usize,
        mean: S,
        std: S,
    },
    OneHot {
        feature_index: usize,
        code: u32,
    },
}

/// Dense row-major encoded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix<S> {
    pub ids: Vec<u64>,
    pub width: usize,
    pub rows: Vec<S>,
}

impl<S: Scalar> EncodedMatrix<S> {
    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }
}

/// Encoder fitted on a training subset; transform applies the frozen
/// statistics and category tables to any subset of the same dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<S: Scalar> {
    pub include_sensitive: bool,
    pub fit_ids: Vec<u64>,
    columns: Vec<EncodedColumn>,
    stats: Vec<ColumnStats<S>>,
}

impl<S: Scalar> Encoder<S> {
    /// Fits column statistics on the rows of `ds` whose id is in `train_ids`.
    ///
    /// Flagged sensitive columns are excluded unless `include_sensitive`, in
    /// which case they are appended after all other columns and marked in the
    /// manifest. Zero-variance numeric columns encode as constant zero (a
    /// warning is logged); categoricals one-hot over the categories observed
    /// in training, in code order, so unseen categories transform to an
    /// all-zero block.
    pub fn fit(ds: &Dataset<S>, train_ids: &BTreeSet<u64>, include_sensitive: bool) -> Result<Self> {
        if train_ids.is_empty() {
            return Err(Error::InvalidInput("encoder needs at least one training row".into()));
        }
        let index = ds.id_index();
        let mut rows = Vec::with_capacity(train_ids.len());
        for &id in train_ids {
            match index.get(&id) {
                Some(&i) => rows.push(i),
                None => return Err(Error::UnknownId(id)),
            }
        }

        let mut columns = Vec::new();
        let mut stats = Vec::new();
        let push_feature = |fi: usize, columns: &mut Vec<EncodedColumn>, stats: &mut Vec<ColumnStats<S>>| {
            let f = &ds.features[fi];
            match &f.data {
                FeatureData::Numeric(v) => {
                    let vals: Vec<S> = rows.iter().map(|&i| v[i]).collect();
                    let mean = crate::scalar::mean(&vals).unwrap();
                    let std = crate::scalar::pop_std(&vals).unwrap();
                    if std == S::zero() {
                        log::warn!(
                            "numeric feature {} is constant on the training rows; encoding as zero",
                            f.name
                        );
                    }
                    columns.push(EncodedColumn {
                        source: f.name.clone(),
                        kind: EncodedKind::Numeric,
                        sensitive: f.sensitive,
                    });
                    stats.push(ColumnStats::Numeric {
                        feature_index: fi,
                        mean,
                        std,
                    });
                }
                FeatureData::Categorical { codes, categories } => {
                    let observed: BTreeSet<u32> = rows.iter().map(|&i| codes[i]).collect();
                    for code in observed {
                        columns.push(EncodedColumn {
                            source: f.name.clone(),
                            kind: EncodedKind::OneHot {
                                category: categories[code as usize].clone(),
                            },
                            sensitive: f.sensitive,
                        });
                        stats.push(ColumnStats::OneHot {
                            feature_index: fi,
                            code,
                        });
                    }
                }
            }
        };

        for (fi, f) in ds.features.iter().enumerate() {
            if !f.sensitive {
                push_feature(fi, &mut columns, &mut stats);
            }
        }
        if include_sensitive {
            for (fi, f) in ds.features.iter().enumerate() {
                if f.sensitive {
                    push_feature(fi, &mut columns, &mut stats);
                }
            }
        }

        Ok(Encoder {
            include_sensitive,
            fit_ids: train_ids.iter().copied().collect(),
            columns,
            stats,
        })
    }

    /// Manifest of output columns in order.
    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    /// Names of the source features contributing at least one column, in
    /// first-appearance order.
    pub fn source_features(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for c in &self.columns {
            if !seen.contains(&c.source) {
                seen.push(c.source.clone());
            }
        }
        seen
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Encodes the rows of `ds` whose id is in `ids`, in `ids` iteration
    /// order (ascending, since the set is ordered).
    pub fn transform(&self, ds: &Dataset<S>, ids: &BTreeSet<u64>) -> Result<EncodedMatrix<S>> {
        let index = ds.id_index();
        let width = self.width();
        let mut rows = Vec::with_capacity(ids.len() * width);
        let mut out_ids = Vec::with_capacity(ids.len());
        for &id in ids {
            let &i = index.get(&id).ok_or(Error::UnknownId(id))?;
            out_ids.push(id);
            for st in &self.stats {
                let v = match *st {
                    ColumnStats::Numeric {
                        feature_index,
                        mean,
                        std,
                    } => match &ds.features[feature_index].data {
                        FeatureData::Numeric(col) => {
                            if std == S::zero() {
                                S::zero()
                            } else {
                                (col[i] - mean) / std
                            }
                        }
                        _ => {
                            return Err(Error::ShapeMismatch(format!(
                                "feature {} changed kind between fit and transform",
                                ds.features[feature_index].name
                            )))
                        }
                    },
                    ColumnStats::OneHot {
                        feature_index,
                        code,
                    } => match &ds.features[feature_index].data {
                        FeatureData::Categorical { codes, .. } => {
                            if codes[i] == code {
                                S::one()
                            } else {
                                S::zero()
                            }
                        }
                        _ => {
                            return Err(Error::ShapeMismatch(format!(
                                "feature {} changed kind between fit and transform",
                                ds.features[feature_index].name
                            )))
                        }
                    },
                };
                rows.push(v);
            }
        }
        Ok(EncodedMatrix {
            ids: out_ids,
            width,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{Dataset, Feature, FeatureData};

    fn mixed() -> Dataset<f64> {
        Dataset::new(
            "mixed",
            vec![1, 2, 3, 4],
            vec![0, 0, 1, 1],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0, 0, 1, 1],
            vec![1.0; 4],
            1.5,
            vec![
                Feature {
                    name: "age".into(),
                    sensitive: false,
                    data: FeatureData::Numeric(vec![10.0, 20.0, 30.0, 40.0]),
                },
                Feature {
                    name: "color".into(),
                    sensitive: false,
                    data: FeatureData::Categorical {
                        codes: vec![0, 1, 2, 0],
                        categories: vec!["red".into(), "green".into(), "blue".into()],
                    },
                },
                Feature {
                    name: "group".into(),
                    sensitive: true,
                    data: FeatureData::Numeric(vec![0.0, 0.0, 1.0, 1.0]),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_hot_width_and_standardization() {
        let ds = mixed();
        let all: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let enc = Encoder::fit(&ds, &all, false).unwrap();
        // age (1) + color one-hot (3); sensitive column excluded.
        assert_eq!(enc.width(), 4);
        assert!(enc.columns().iter().all(|c| !c.sensitive));
        let m = enc.transform(&ds, &all).unwrap();
        // age: mean 25, population std sqrt(125)
        let std = 125.0f64.sqrt();
        assert!((m.row(0)[0] - (10.0 - 25.0) / std).abs() < 1e-12);
        // row 0 color = red -> (1, 0, 0)
        assert_eq!(&m.row(0)[1..4], &[1.0, 0.0, 0.0]);
        // row 2 color = blue -> (0, 0, 1)
        assert_eq!(&m.row(2)[1..4], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sensitive_column_appended_when_requested() {
        let ds = mixed();
        let all: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let enc = Encoder::fit(&ds, &all, true).unwrap();
        assert_eq!(enc.width(), 5);
        let last = enc.columns().last().unwrap();
        assert!(last.sensitive);
        assert_eq!(last.source, "group");
        assert_eq!(
            enc.source_features(),
            vec!["age".to_string(), "color".into(), "group".into()]
        );
    }

    #[test]
    fn unseen_category_encodes_to_zero_block() {
        let ds = mixed();
        // Fit only on rows 1 and 4 (colors red, red): one color column.
        let train: BTreeSet<u64> = [1u64, 4].into_iter().collect();
        let enc = Encoder::fit(&ds, &train, false).unwrap();
        assert_eq!(enc.width(), 2);
        let all: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let m = enc.transform(&ds, &all).unwrap();
        // id 2 has color green, unseen at fit: zero in the red column.
        assert_eq!(m.row(1)[1], 0.0);
        assert_eq!(m.row(0)[1], 1.0);
    }

    #[test]
    fn constant_numeric_encodes_to_zero() {
        let ds = Dataset::new(
            "const",
            vec![1, 2, 3],
            vec![0, 1, 1],
            vec![0.0, 1.0, 2.0],
            vec![0, 1, 1],
            vec![1.0; 3],
            0.5,
            vec![Feature {
                name: "flat".into(),
                sensitive: false,
                data: FeatureData::Numeric(vec![7.0, 7.0, 7.0]),
            }],
        )
        .unwrap();
        let all: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let enc = Encoder::fit(&ds, &all, false).unwrap();
        let m = enc.transform(&ds, &all).unwrap();
        assert!(m.rows.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transform_rejects_unknown_ids() {
        let ds = mixed();
        let all: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let enc = Encoder::fit(&ds, &all, false).unwrap();
        let bad: BTreeSet<u64> = [99u64].into_iter().collect();
        assert!(enc.transform(&ds, &bad).is_err());
    }
}
