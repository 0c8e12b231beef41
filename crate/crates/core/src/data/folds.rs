//! Cross-validation fold plans keyed by instance id so the same plan applies
//! to every biased view of a dataset regardless of row order or row loss.

use crate::data::dataset::Dataset;
use crate::error::Error;
use crate::scalar::Scalar;
use crate::seeds;
use crate::Result;
use rand::seq::SliceRandom;
use std::collections::{BTreeMap, BTreeSet};

/// Assignment of every instance id to a fold, plus which folds currently act
/// as test and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignment: BTreeMap<u64, u32>,
    pub test_fold: u32,
    pub validation_fold: u32,
}

impl FoldPlan {
    /// Same assignment with test fold `i` and validation fold `(i+1) % k`.
    pub fn rotated(&self, i: u32) -> FoldPlan {
        let k = self.n_folds as u32;
        FoldPlan {
            n_folds: self.n_folds,
            assignment: self.assignment.clone(),
            test_fold: i % k,
            validation_fold: (i + 1) % k,
        }
    }

    pub fn fold_ids(&self, fold: u32) -> BTreeSet<u64> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn test_ids(&self) -> BTreeSet<u64> {
        self.fold_ids(self.test_fold)
    }

    pub fn validation_ids(&self) -> BTreeSet<u64> {
        self.fold_ids(self.validation_fold)
    }

    /// Ids in neither the test nor the validation fold.
    pub fn train_pool_ids(&self) -> BTreeSet<u64> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f != self.test_fold && f != self.validation_fold)
            .map(|(&id, _)| id)
            .collect()
    }
}

/// Builds a fold plan stratified by (sensitive, label).
///
/// Each stratum's ids are shuffled with a stratum-specific stream of `seed`
/// and dealt round-robin, continuing the fold offset from one stratum to the
/// next so fold sizes stay within one of each other. When any stratum is
/// smaller than `n_folds` the plan degrades to a plain random split over all
/// ids and a warning is logged.
pub fn make_fold_plan<S: Scalar>(ds: &Dataset<S>, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 folds (test, validation, training), got {n_folds}"
        )));
    }
    if n_folds > ds.n() {
        return Err(Error::InvalidInput(format!(
            "{n_folds} folds but only {} rows",
            ds.n()
        )));
    }

    // Strata keyed (sensitive, label), ids sorted for order independence.
    let mut strata: BTreeMap<(u8, u8), Vec<u64>> = BTreeMap::new();
    for i in 0..ds.n() {
        strata
            .entry((ds.sensitive[i], ds.label[i]))
            .or_default()
            .push(ds.ids[i]);
    }
    for ids in strata.values_mut() {
        ids.sort_unstable();
    }

    let min_cell = strata.values().map(Vec::len).min().unwrap_or(0);
    let mut assignment = BTreeMap::new();

    if min_cell < n_folds {
        log::warn!(
            "smallest (group, label) stratum has {min_cell} rows, fewer than {n_folds} folds; \
             falling back to a plain random split"
        );
        let mut all: Vec<u64> = ds.ids.clone();
        all.sort_unstable();
        let mut rng = seeds::rng(seeds::mix_str(seed, "fold-plain"));
        all.shuffle(&mut rng);
        for (i, id) in all.into_iter().enumerate() {
            assignment.insert(id, (i % n_folds) as u32);
        }
    } else {
        let mut offset = 0usize;
        for ((a, y), mut ids) in strata {
            let tag = seeds::mix_str(seed, &format!("fold-stratum-{a}-{y}"));
            let mut rng = seeds::rng(tag);
            ids.shuffle(&mut rng);
            for id in ids {
                assignment.insert(id, (offset % n_folds) as u32);
                offset += 1;
            }
        }
    }

    Ok(FoldPlan {
        n_folds,
        assignment,
        test_fold: 0,
        validation_fold: 1,
    })
}
