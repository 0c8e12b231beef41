//! Raw feature matrix for tree learners: numeric columns keep their values,
//! categorical columns keep their codes. Rows are always materialized in
//! ascending id order so fitted models cannot depend on dataset row order.

use crate::data::{Dataset, FeatureData};
use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;
use std::collections::BTreeSet;

/// Identity of one matrix column, kept by fitted models so prediction can
/// rebuild a compatible matrix from any view by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub sensitive: bool,
    pub categorical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValues<S> {
    Numeric(Vec<S>),
    Categorical(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn<S> {
    pub spec: ColumnSpec,
    pub values: RawValues<S>,
}

/// Column-major raw matrix over a fixed id subset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<S> {
    pub ids: Vec<u64>,
    pub columns: Vec<RawColumn<S>>,
}

impl<S: Scalar> FeatureMatrix<S> {
    /// Builds the matrix over `ids` (ascending order). Sensitive columns are
    /// dropped unless `include_sensitive`, in which case they come last.
    pub fn from_dataset(
        ds: &Dataset<S>,
        ids: &BTreeSet<u64>,
        include_sensitive: bool,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidInput("feature matrix needs at least one row".into()));
        }
        let index = ds.id_index();
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            match index.get(&id) {
                Some(&i) => rows.push(i),
                None => return Err(Error::UnknownId(id)),
            }
        }
        let mut columns = Vec::new();
        let add = |sensitive_pass: bool, columns: &mut Vec<RawColumn<S>>| {
            for f in &ds.features {
                if f.sensitive != sensitive_pass {
                    continue;
                }
                let values = match &f.data {
                    FeatureData::Numeric(v) => {
                        RawValues::Numeric(rows.iter().map(|&i| v[i]).collect())
                    }
                    FeatureData::Categorical { codes, .. } => {
                        RawValues::Categorical(rows.iter().map(|&i| codes[i]).collect())
                    }
                };
                columns.push(RawColumn {
                    spec: ColumnSpec {
                        name: f.name.clone(),
                        sensitive: f.sensitive,
                        categorical: matches!(f.data, FeatureData::Categorical { .. }),
                    },
                    values,
                });
            }
        };
        add(false, &mut columns);
        if include_sensitive {
            add(true, &mut columns);
        }
        if columns.is_empty() {
            return Err(Error::InvalidInput(
                "feature matrix has no columns (every feature is sensitive and excluded)".into(),
            ));
        }
        Ok(FeatureMatrix {
            ids: ids.iter().copied().collect(),
            columns,
        })
    }

    /// Rebuilds a matrix over `ids` with exactly the columns of `manifest`,
    /// located in `ds` by name. Kind or flag mismatches are errors.
    pub fn matching(ds: &Dataset<S>, ids: &BTreeSet<u64>, manifest: &[ColumnSpec]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidInput("feature matrix needs at least one row".into()));
        }
        let index = ds.id_index();
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            match index.get(&id) {
                Some(&i) => rows.push(i),
                None => return Err(Error::UnknownId(id)),
            }
        }
        let mut columns = Vec::with_capacity(manifest.len());
        for spec in manifest {
            let f = ds.feature(&spec.name).ok_or_else(|| {
                Error::ShapeMismatch(format!("dataset has no feature named {}", spec.name))
            })?;
            let categorical = matches!(f.data, FeatureData::Categorical { .. });
            if categorical != spec.categorical || f.sensitive != spec.sensitive {
                return Err(Error::ShapeMismatch(format!(
                    "feature {} does not match the model's training manifest",
                    spec.name
                )));
            }
            let values = match &f.data {
                FeatureData::Numeric(v) => {
                    RawValues::Numeric(rows.iter().map(|&i| v[i]).collect())
                }
                FeatureData::Categorical { codes, .. } => {
                    RawValues::Categorical(rows.iter().map(|&i| codes[i]).collect())
                }
            };
            columns.push(RawColumn {
                spec: spec.clone(),
                values,
            });
        }
        Ok(FeatureMatrix {
            ids: ids.iter().copied().collect(),
            columns,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn manifest(&self) -> Vec<ColumnSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }
}

/// Labels and weights of `ds` rows in the same ascending-id order a
/// [`FeatureMatrix`] over the same ids uses.
pub fn labels_weights<S: Scalar>(ds: &Dataset<S>, ids: &BTreeSet<u64>) -> Result<(Vec<u8>, Vec<S>)> {
    let index = ds.id_index();
    let mut labels = Vec::with_capacity(ids.len());
    let mut weights = Vec::with_capacity(ids.len());
    for &id in ids {
        let &i = index.get(&id).ok_or(Error::UnknownId(id))?;
        labels.push(ds.label[i]);
        weights.push(ds.weight[i]);
    }
    Ok((labels, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Feature;

    fn ds() -> Dataset<f64> {
        Dataset::new(
            "m",
            vec![5, 3, 9, 7],
            vec![0, 1, 0, 1],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0, 0, 1, 1],
            vec![1.0, 2.0, 3.0, 4.0],
            2.5,
            vec![
                Feature {
                    name: "num".into(),
                    sensitive: false,
                    data: FeatureData::Numeric(vec![10.0, 20.0, 30.0, 40.0]),
                },
                Feature {
                    name: "cat".into(),
                    sensitive: false,
                    data: FeatureData::Categorical {
                        codes: vec![0, 1, 0, 1],
                        categories: vec!["a".into(), "b".into()],
                    },
                },
                Feature {
                    name: "grp".into(),
                    sensitive: true,
                    data: FeatureData::Numeric(vec![0.0, 1.0, 0.0, 1.0]),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn rows_come_out_in_ascending_id_order() {
        let d = ds();
        let all: BTreeSet<u64> = d.ids.iter().copied().collect();
        let m = FeatureMatrix::from_dataset(&d, &all, false).unwrap();
        assert_eq!(m.ids, vec![3, 5, 7, 9]);
        match &m.columns[0].values {
            RawValues::Numeric(v) => assert_eq!(v, &vec![20.0, 10.0, 40.0, 30.0]),
            _ => panic!("expected numeric"),
        }
        assert_eq!(m.n_columns(), 2);
        let (labels, weights) = labels_weights(&d, &all).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1]);
        assert_eq!(weights, vec![2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn sensitive_column_position_and_flag() {
        let d = ds();
        let all: BTreeSet<u64> = d.ids.iter().copied().collect();
        let m = FeatureMatrix::from_dataset(&d, &all, true).unwrap();
        assert_eq!(m.n_columns(), 3);
        assert!(m.columns[2].spec.sensitive);
        assert_eq!(m.columns[2].spec.name, "grp");
    }

    #[test]
    fn matching_rebuilds_by_name_and_checks_kind() {
        let d = ds();
        let all: BTreeSet<u64> = d.ids.iter().copied().collect();
        let m = FeatureMatrix::from_dataset(&d, &all, true).unwrap();
        let manifest = m.manifest();
        let sub: BTreeSet<u64> = [3u64, 9].into_iter().collect();
        let m2 = FeatureMatrix::matching(&d, &sub, &manifest).unwrap();
        assert_eq!(m2.ids, vec![3, 9]);
        assert_eq!(m2.n_columns(), 3);
        let bad = vec![ColumnSpec {
            name: "num".into(),
            sensitive: false,
            categorical: true,
        }];
        assert!(FeatureMatrix::matching(&d, &sub, &bad).is_err());
        let missing = vec![ColumnSpec {
            name: "nope".into(),
            sensitive: false,
            categorical: false,
        }];
        assert!(FeatureMatrix::matching(&d, &sub, &missing).is_err());
    }
}
