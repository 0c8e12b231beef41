//! Dataset type: rows with stable ids, a binary sensitive attribute, a real
//! score with its labelling threshold, binary labels, weights, and a table of
//! named feature columns.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;
use std::collections::{BTreeSet, HashMap, HashSet};

/// Storage for one feature column.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureData<S> {
    Numeric(Vec<S>),
    /// Integer codes into `categories`; codes are assigned once at ingestion
    /// and stay stable across every derived view of the dataset.
    Categorical { codes: Vec<u32>, categories: Vec<String> },
}

impl<S> FeatureData<S> {
    pub fn len(&self) -> usize {
        match self {
            FeatureData::Numeric(v) => v.len(),
            FeatureData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A named feature column. The sensitive attribute appears here as a flagged
/// column so nothing downstream can include it silently.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature<S> {
    pub name: String,
    pub sensitive: bool,
    pub data: FeatureData<S>,
}

/// An in-memory tabular dataset.
///
/// Invariants checked at construction: aligned column lengths, unique ids,
/// binary sensitive/label columns, strictly positive finite weights, finite
/// scores, and both sensitive groups non-empty unless `group_removed` is set.
/// `label == (score >= threshold)` holds for fair datasets and for
/// label-biased views (which carry the shifted score); mitigation transforms
/// that flip labels break the link deliberately.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S: Scalar = f64> {
    pub name: String,
    pub ids: Vec<u64>,
    /// Binary group membership, 1 = unprivileged.
    pub sensitive: Vec<u8>,
    pub score: Vec<S>,
    /// Binary outcome, 1 = positive/desirable.
    pub label: Vec<u8>,
    pub weight: Vec<S>,
    pub threshold: S,
    pub features: Vec<Feature<S>>,
    /// True for views that deliberately dropped one whole group; SPD-family
    /// metrics report their undefined marker on such views.
    pub group_removed: bool,
}

impl<S: Scalar> Dataset<S> {
    /// Builds a dataset and validates its structural invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        ids: Vec<u64>,
        sensitive: Vec<u8>,
        score: Vec<S>,
        label: Vec<u8>,
        weight: Vec<S>,
        threshold: S,
        features: Vec<Feature<S>>,
    ) -> Result<Self> {
        Self::from_parts(
            name, ids, sensitive, score, label, weight, threshold, features, false,
        )
    }

    /// Like [`Dataset::new`] but restores the `group_removed` flag, for
    /// rebuilding a view from serialized form.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        name: impl Into<String>,
        ids: Vec<u64>,
        sensitive: Vec<u8>,
        score: Vec<S>,
        label: Vec<u8>,
        weight: Vec<S>,
        threshold: S,
        features: Vec<Feature<S>>,
        group_removed: bool,
    ) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            ids,
            sensitive,
            score,
            label,
            weight,
            threshold,
            features,
            group_removed,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        for (what, len) in [
            ("sensitive", self.sensitive.len()),
            ("score", self.score.len()),
            ("label", self.label.len()),
            ("weight", self.weight.len()),
        ] {
            if len != n {
                return Err(Error::ShapeMismatch(format!(
                    "{what} column has {len} rows, ids have {n}"
                )));
            }
        }
        for f in &self.features {
            if f.data.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "feature {} has {} rows, ids have {n}",
                    f.name,
                    f.data.len()
                )));
            }
            if let FeatureData::Categorical { codes, categories } = &f.data {
                if codes.iter().any(|&c| c as usize >= categories.len()) {
                    return Err(Error::InvalidInput(format!(
                        "feature {} has a code outside its category table",
                        f.name
                    )));
                }
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for &id in &self.ids {
            if !seen.insert(id) {
                return Err(Error::InvalidInput(format!("duplicate instance id {id}")));
            }
        }
        if self.sensitive.iter().any(|&a| a > 1) || self.label.iter().any(|&y| y > 1) {
            return Err(Error::InvalidInput(
                "sensitive and label columns must be binary".into(),
            ));
        }
        if self
            .weight
            .iter()
            .any(|w| !w.is_finite() || *w <= S::zero())
        {
            return Err(Error::InvalidInput(
                "weights must be finite and > 0".into(),
            ));
        }
        if self.score.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("scores must be finite".into()));
        }
        if !self.group_removed {
            let unpriv = self.sensitive.iter().filter(|&&a| a == 1).count();
            if unpriv == 0 || unpriv == n {
                return Err(Error::InvalidInput(
                    "both sensitive groups must be non-empty (or flag group_removed)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Map from instance id to row position.
    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
    }

    /// True when every label equals `(score >= threshold)`.
    pub fn labels_consistent(&self) -> bool {
        self.ids.iter().enumerate().all(|(i, _)| {
            let expect = u8::from(self.score[i] >= self.threshold);
            self.label[i] == expect
        })
    }

    /// Rows kept by `mask`, original order preserved. A view that empties one
    /// group gets `group_removed` set so SPD-family metrics mark undefined.
    pub fn retain_rows(&self, mask: &[bool]) -> Result<Dataset<S>> {
        if mask.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries, dataset has {}",
                mask.len(),
                self.n()
            )));
        }
        let keep: Vec<usize> = (0..self.n()).filter(|&i| mask[i]).collect();
        if keep.is_empty() {
            return Err(Error::InvalidInput("view would be empty".into()));
        }
        let features = self
            .features
            .iter()
            .map(|f| Feature {
                name: f.name.clone(),
                sensitive: f.sensitive,
                data: match &f.data {
                    FeatureData::Numeric(v) => {
                        FeatureData::Numeric(keep.iter().map(|&i| v[i]).collect())
                    }
                    FeatureData::Categorical { codes, categories } => FeatureData::Categorical {
                        codes: keep.iter().map(|&i| codes[i]).collect(),
                        categories: categories.clone(),
                    },
                },
            })
            .collect();
        let sensitive: Vec<u8> = keep.iter().map(|&i| self.sensitive[i]).collect();
        let unpriv = sensitive.iter().filter(|&&a| a == 1).count();
        let group_removed = self.group_removed || unpriv == 0 || unpriv == sensitive.len();
        let ds = Dataset {
            name: self.name.clone(),
            ids: keep.iter().map(|&i| self.ids[i]).collect(),
            sensitive,
            score: keep.iter().map(|&i| self.score[i]).collect(),
            label: keep.iter().map(|&i| self.label[i]).collect(),
            weight: keep.iter().map(|&i| self.weight[i]).collect(),
            threshold: self.threshold,
            features,
            group_removed,
        };
        Ok(ds)
    }

    /// Subset containing exactly the rows whose id is in `ids`, original row
    /// order preserved.
    pub fn subset_by_ids(&self, ids: &BTreeSet<u64>) -> Result<Dataset<S>> {
        let mask: Vec<bool> = self.ids.iter().map(|id| ids.contains(id)).collect();
        let found = mask.iter().filter(|&&m| m).count();
        if found != ids.len() {
            let known: HashSet<u64> = self.ids.iter().copied().collect();
            let missing = ids.iter().find(|id| !known.contains(id)).copied();
            if let Some(id) = missing {
                return Err(Error::UnknownId(id));
            }
        }
        self.retain_rows(&mask)
    }

    /// Rows of each group: (privileged count, unprivileged count).
    pub fn group_counts(&self) -> (usize, usize) {
        let unpriv = self.sensitive.iter().filter(|&&a| a == 1).count();
        (self.n() - unpriv, unpriv)
    }

    /// Positive-label count of each group: (privileged, unprivileged).
    pub fn group_positive_counts(&self) -> (usize, usize) {
        let mut pos = [0usize; 2];
        for i in 0..self.n() {
            if self.label[i] == 1 {
                pos[self.sensitive[i] as usize] += 1;
            }
        }
        (pos[0], pos[1])
    }

    /// Statistical parity difference of the labels themselves
    /// (unprivileged minus privileged positive rate); `None` if a group is
    /// empty or the view dropped a group.
    pub fn label_spd(&self) -> Option<S> {
        if self.group_removed {
            return None;
        }
        let (n0, n1) = self.group_counts();
        if n0 == 0 || n1 == 0 {
            return None;
        }
        let (p0, p1) = self.group_positive_counts();
        let r1 = S::from_usize(p1).unwrap() / S::from_usize(n1).unwrap();
        let r0 = S::from_usize(p0).unwrap() / S::from_usize(n0).unwrap();
        Some(r1 - r0)
    }

    /// Label SPD with rows counted by weight instead of 1.
    pub fn weighted_label_spd(&self) -> Option<S> {
        if self.group_removed {
            return None;
        }
        let mut mass = [S::zero(); 2];
        let mut pos = [S::zero(); 2];
        for i in 0..self.n() {
            let g = self.sensitive[i] as usize;
            mass[g] += self.weight[i];
            if self.label[i] == 1 {
                pos[g] += self.weight[i];
            }
        }
        if mass[0] <= S::zero() || mass[1] <= S::zero() {
            return None;
        }
        Some(pos[1] / mass[1] - pos[0] / mass[0])
    }

    /// Overall positive-label rate.
    pub fn base_rate(&self) -> S {
        let pos = self.label.iter().filter(|&&y| y == 1).count();
        S::from_usize(pos).unwrap() / S::from_usize(self.n()).unwrap()
    }

    /// Half the score range, the unit in which label-bias shifts and noise
    /// are expressed. Zero means the score column is constant.
    pub fn score_scale(&self) -> S {
        let mut lo = self.score[0];
        let mut hi = self.score[0];
        for &s in &self.score[1..] {
            if s < lo {
                lo = s;
            }
            if s > hi {
                hi = s;
            }
        }
        (hi - lo) / S::from_f64_lossy(2.0)
    }

    /// Looks up a feature column by name.
    pub fn feature(&self, name: &str) -> Option<&Feature<S>> {
        self.features.iter().find(|f| f.name == name)
    }
}
