//! Bias mitigation: three pre-processing transforms of the training data
//! (reweighing, label massaging, dropping the sensitive column) and five
//! post-processing transforms of predictions (threshold/label surgeries
//! fitted on a validation fold), plus the method taxonomy the pipeline
//! iterates over.
//!
//! A method that cannot run on a given fold (empty cell, degenerate
//! predictions) reports [`crate::Error::MethodFailed`]; it is never silently
//! skipped or passed through.

pub mod post;

pub use post::{
    apply, fit_ceo, fit_eop, fit_roc, CostConstraint, PostProcessor, RocCriterion,
    DEFAULT_ROC_BOUNDS, DEFAULT_ROC_MARGINS, DEFAULT_ROC_THRESHOLDS,
};

use crate::data::Dataset;
use crate::error::Error;
use crate::learn::{fit_logistic_on, LogisticParams};
use crate::scalar::Scalar;
use crate::seeds;
use crate::Result;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Everything the pipeline can run in the `method` slot, including the
/// untreated baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Unmitigated,
    Reweighing,
    Massaging,
    Ftu,
    Eop,
    Ceo,
    RocSpd,
    RocEqop,
    RocAvod,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Unmitigated,
        Method::Reweighing,
        Method::Massaging,
        Method::Ftu,
        Method::Eop,
        Method::Ceo,
        Method::RocSpd,
        Method::RocEqop,
        Method::RocAvod,
    ];

    /// The eight actual mitigation strategies (everything but the baseline).
    pub const MITIGATIONS: [Method; 8] = [
        Method::Reweighing,
        Method::Massaging,
        Method::Ftu,
        Method::Eop,
        Method::Ceo,
        Method::RocSpd,
        Method::RocEqop,
        Method::RocAvod,
    ];

    /// Pre-processing methods transform the training data before fitting.
    pub fn is_pre(self) -> bool {
        matches!(self, Method::Reweighing | Method::Massaging | Method::Ftu)
    }

    /// Post-processing methods transform the unmitigated model's predictions.
    pub fn is_post(self) -> bool {
        matches!(
            self,
            Method::Eop | Method::Ceo | Method::RocSpd | Method::RocEqop | Method::RocAvod
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Unmitigated => "unmitigated",
            Method::Reweighing => "reweighing",
            Method::Massaging => "massaging",
            Method::Ftu => "ftu",
            Method::Eop => "eop",
            Method::Ceo => "ceo",
            Method::RocSpd => "roc_spd",
            Method::RocEqop => "roc_eqop",
            Method::RocAvod => "roc_avod",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s}")))
    }
}

/// A training view prepared by a pre-processing method, plus whether the
/// learner may see the sensitive column and any audit notes produced on the
/// way (saturation, degeneracies).
#[derive(Debug, Clone)]
pub struct PreparedTraining<S: Scalar> {
    pub dataset: Dataset<S>,
    pub include_sensitive: bool,
    pub notes: Vec<String>,
}

/// Dispatches a pre-processing method (or the baseline) onto a training
/// view. Post-processing methods are rejected: they reuse the baseline model
/// and never touch training data.
pub fn prepare_training<S: Scalar>(
    train: &Dataset<S>,
    method: Method,
    seed: u64,
) -> Result<PreparedTraining<S>> {
    match method {
        Method::Unmitigated => Ok(PreparedTraining {
            dataset: train.clone(),
            include_sensitive: true,
            notes: Vec::new(),
        }),
        Method::Reweighing => {
            let dataset = reweigh(train)?;
            Ok(PreparedTraining {
                dataset,
                include_sensitive: true,
                notes: Vec::new(),
            })
        }
        Method::Massaging => {
            let (dataset, notes) = massage(train, seed)?;
            Ok(PreparedTraining {
                dataset,
                include_sensitive: true,
                notes,
            })
        }
        Method::Ftu => Ok(PreparedTraining {
            dataset: train.clone(),
            include_sensitive: false,
            notes: Vec::new(),
        }),
        _ => Err(Error::InvalidInput(format!(
            "{method} is not a pre-processing method"
        ))),
    }
}

/// Reweighs every row so that, with weights as soft counts, group membership
/// and label are independent: weight factor = P(A=a)·P(Y=y) / P(A=a, Y=y),
/// all probabilities weighted by the existing weights. Labels and features
/// are untouched, and the weighted label parity gap of the result is zero by
/// algebra.
pub fn reweigh<S: Scalar>(train: &Dataset<S>) -> Result<Dataset<S>> {
    let mut mass = [[S::zero(); 2]; 2];
    let mut total = S::zero();
    for i in 0..train.n() {
        mass[train.sensitive[i] as usize][train.label[i] as usize] += train.weight[i];
        total += train.weight[i];
    }
    for a in 0..2 {
        for y in 0..2 {
            if mass[a][y] <= S::zero() {
                return Err(Error::method_failed(
                    "reweighing",
                    format!("empty cell: group {a}, label {y}"),
                ));
            }
        }
    }
    let group_mass = [mass[0][0] + mass[0][1], mass[1][0] + mass[1][1]];
    let label_mass = [mass[0][0] + mass[1][0], mass[0][1] + mass[1][1]];
    let mut out = train.clone();
    for i in 0..out.n() {
        let a = out.sensitive[i] as usize;
        let y = out.label[i] as usize;
        // (P(a) * P(y)) / P(a, y) with each P = mass / total.
        let factor = group_mass[a] * label_mass[y] / (total * mass[a][y]);
        out.weight[i] = out.weight[i] * factor;
    }
    Ok(out)
}

/// Flips labels of boundary instances to close the label parity gap: the
/// minimal symmetric flip count M (top-ranked unprivileged negatives become
/// positive, bottom-ranked privileged positives become negative) chosen so
/// the post-flip gap is as close to zero as the discreteness allows, with
/// fewer flips winning ties. A training view whose gap is already zero or in
/// the unprivileged group's favour is returned unchanged.
///
/// The ranker is the logistic scorer fitted on this training view with the
/// sensitive column included; `seed` only shuffles rows ahead of the stable
/// score sort so exact ranker-score ties break reproducibly.
pub fn massage<S: Scalar>(train: &Dataset<S>, seed: u64) -> Result<(Dataset<S>, Vec<String>)> {
    let (n_priv, n_unpriv) = train.group_counts();
    if n_priv == 0 || n_unpriv == 0 || train.group_removed {
        return Err(Error::method_failed(
            "massaging",
            "both sensitive groups must be present",
        ));
    }
    let spd = train
        .label_spd()
        .expect("both groups verified non-empty above");
    let mut notes = Vec::new();
    if spd >= S::zero() {
        if spd > S::zero() {
            notes.push(format!(
                "label gap already favours the unprivileged group ({}); no flips",
                spd.to_f64_lossy()
            ));
        }
        return Ok((train.clone(), notes));
    }

    // SPD + M * (1/n1 + 1/n0) is closest to zero at one of the two integers
    // around the exact root; prefer the smaller on a tie.
    let c = 1.0 / n_unpriv as f64 + 1.0 / n_priv as f64;
    let x = -spd.to_f64_lossy() / c;
    let lo = x.floor().max(0.0) as usize;
    let hi = x.ceil().max(0.0) as usize;
    let residual = |m: usize| (spd.to_f64_lossy() + m as f64 * c).abs();
    let m = if residual(lo) <= residual(hi) { lo } else { hi };
    if m == 0 {
        return Ok((train.clone(), notes));
    }

    let ids: BTreeSet<u64> = train.ids.iter().copied().collect();
    let ranker = fit_logistic_on(train, &ids, true, &LogisticParams::default())?;
    let scored = ranker.predict(train, &ids)?;
    let score_of: std::collections::HashMap<u64, S> = scored
        .ids
        .iter()
        .copied()
        .zip(scored.score.as_ref().expect("logistic always scores").iter().copied())
        .collect();

    let mut up_negative: Vec<(u64, S)> = Vec::new();
    let mut priv_positive: Vec<(u64, S)> = Vec::new();
    for i in 0..train.n() {
        let entry = (train.ids[i], score_of[&train.ids[i]]);
        match (train.sensitive[i], train.label[i]) {
            (1, 0) => up_negative.push(entry),
            (0, 1) => priv_positive.push(entry),
            _ => {}
        }
    }
    let mut rng = seeds::rng(seeds::mix_str(seed, "massage-tie-break"));
    up_negative.sort_unstable_by_key(|e| e.0);
    priv_positive.sort_unstable_by_key(|e| e.0);
    up_negative.shuffle(&mut rng);
    priv_positive.shuffle(&mut rng);
    // Stable sorts keep the shuffled order among equal scores.
    up_negative.sort_by(|a, b| b.1.cmp_total(&a.1));
    priv_positive.sort_by(|a, b| a.1.cmp_total(&b.1));

    let m_up = m.min(up_negative.len());
    let m_pn = m.min(priv_positive.len());
    if m_up < m {
        notes.push(format!(
            "saturated: wanted {m} unprivileged promotions, only {m_up} negatives available"
        ));
    }
    if m_pn < m {
        notes.push(format!(
            "saturated: wanted {m} privileged demotions, only {m_pn} positives available"
        ));
    }
    let promote: BTreeSet<u64> = up_negative[..m_up].iter().map(|e| e.0).collect();
    let demote: BTreeSet<u64> = priv_positive[..m_pn].iter().map(|e| e.0).collect();

    let mut out = train.clone();
    for i in 0..out.n() {
        if promote.contains(&out.ids[i]) {
            out.label[i] = 1;
        } else if demote.contains(&out.ids[i]) {
            out.label[i] = 0;
        }
    }
    notes.push(format!(
        "massaging flipped {m_up} unprivileged rows up and {m_pn} privileged rows down"
    ));
    Ok((out, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Feature, FeatureData};
    use rand::Rng;

    fn cells_ds(n11: usize, n10: usize, n01: usize, n00: usize) -> Dataset<f64> {
        // Rows laid out cell by cell: (A=1,Y=1), (A=1,Y=0), (A=0,Y=1), (A=0,Y=0).
        let n = n11 + n10 + n01 + n00;
        let mut sensitive = Vec::with_capacity(n);
        let mut label = Vec::with_capacity(n);
        for (a, y, count) in [(1, 1, n11), (1, 0, n10), (0, 1, n01), (0, 0, n00)] {
            for _ in 0..count {
                sensitive.push(a as u8);
                label.push(y as u8);
            }
        }
        let score: Vec<f64> = label.iter().map(|&y| y as f64).collect();
        Dataset::new(
            "cells",
            (0..n as u64).collect(),
            sensitive,
            score.clone(),
            label,
            vec![1.0; n],
            0.5,
            vec![Feature {
                name: "x".into(),
                sensitive: false,
                data: FeatureData::Numeric((0..n).map(|i| (i % 7) as f64).collect()),
            }],
        )
        .unwrap()
    }

    #[test]
    fn reweigh_balanced_input_gets_unit_weights() {
        let ds = cells_ds(10, 10, 10, 10);
        let out = reweigh(&ds).unwrap();
        for w in &out.weight {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reweigh_hand_example() {
        let ds = cells_ds(10, 30, 30, 30);
        let out = reweigh(&ds).unwrap();
        // First row is in (A=1, Y=1): (0.4 * 0.4) / 0.1 = 1.6.
        assert!((out.weight[0] - 1.6).abs() < 1e-12);
        // Labels and features untouched.
        assert_eq!(out.label, ds.label);
        assert_eq!(out.features, ds.features);
    }

    #[test]
    fn reweigh_zeroes_weighted_spd_on_random_toys() {
        let mut rng = seeds::rng(99);
        for _ in 0..300 {
            let ds = cells_ds(
                rng.gen_range(1..20),
                rng.gen_range(1..20),
                rng.gen_range(1..20),
                rng.gen_range(1..20),
            );
            let out = reweigh(&ds).unwrap();
            let wspd = out.weighted_label_spd().unwrap();
            assert!(wspd.abs() < 1e-9, "weighted gap {wspd}");
        }
    }

    #[test]
    fn reweigh_empty_cell_fails_loudly() {
        let ds = cells_ds(0, 10, 10, 10);
        let err = reweigh(&ds).unwrap_err();
        assert!(err.is_method_failure());
    }

    #[test]
    fn reweigh_composes_with_existing_weights() {
        let mut ds = cells_ds(5, 10, 10, 5);
        for i in 0..ds.n() {
            ds.weight[i] = 0.5 + (i % 3) as f64;
        }
        let out = reweigh(&ds).unwrap();
        assert!(out.weighted_label_spd().unwrap().abs() < 1e-9);
    }

    fn ranked_ds() -> Dataset<f64> {
        // Unprivileged: 1 positive, 3 negatives; privileged: 3 positives,
        // 1 negative. Label gap = 0.25 - 0.75 = -0.5.
        let sensitive = vec![1, 1, 1, 1, 0, 0, 0, 0];
        let label = vec![1, 0, 0, 0, 1, 1, 1, 0];
        let x = vec![0.9, 0.8, 0.3, 0.1, 0.95, 0.7, 0.2, 0.05];
        let score: Vec<f64> = label.iter().map(|&y| y as f64).collect();
        Dataset::new(
            "ranked",
            (0..8).collect(),
            sensitive.clone(),
            score,
            label,
            vec![1.0; 8],
            0.5,
            vec![
                Feature {
                    name: "x".into(),
                    sensitive: false,
                    data: FeatureData::Numeric(x),
                },
                Feature {
                    name: "grp".into(),
                    sensitive: true,
                    data: FeatureData::Numeric(sensitive.iter().map(|&a| a as f64).collect()),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn massage_hand_example_closes_the_gap() {
        let ds = ranked_ds();
        let (out, notes) = massage(&ds, 1).unwrap();
        // n1 = n0 = 4, gap -0.5: one flip each side zeroes it exactly.
        assert_eq!(out.label_spd(), Some(0.0));
        let flipped: Vec<usize> = (0..8).filter(|&i| out.label[i] != ds.label[i]).collect();
        assert_eq!(flipped.len(), 2);
        assert!(notes.iter().any(|n| n.contains("flipped 1")));
        // Scores and features untouched.
        assert_eq!(out.score, ds.score);
        assert_eq!(out.features, ds.features);
    }

    #[test]
    fn massage_balanced_and_reversed_inputs_unchanged() {
        let balanced = cells_ds(5, 5, 5, 5);
        let (out, _) = massage(&balanced, 3).unwrap();
        assert_eq!(out.label, balanced.label);
        // Gap favouring the unprivileged group: left alone by design.
        let reversed = cells_ds(8, 2, 2, 8);
        assert!(reversed.label_spd().unwrap() > 0.0);
        let (out, notes) = massage(&reversed, 3).unwrap();
        assert_eq!(out.label, reversed.label);
        assert!(notes.iter().any(|n| n.contains("favours")));
    }

    #[test]
    fn massage_flips_extreme_ranker_scores() {
        let ds = ranked_ds();
        let ids: BTreeSet<u64> = ds.ids.iter().copied().collect();
        let ranker = fit_logistic_on(&ds, &ids, true, &LogisticParams::default()).unwrap();
        let scored = ranker.predict(&ds, &ids).unwrap();
        let score_of: std::collections::HashMap<u64, f64> = scored
            .ids
            .iter()
            .copied()
            .zip(scored.score.unwrap())
            .collect();
        let (out, _) = massage(&ds, 1).unwrap();
        for i in 0..8 {
            if out.label[i] != ds.label[i] {
                match ds.sensitive[i] {
                    1 => {
                        // Promoted row outranks every unpromoted unprivileged negative.
                        for j in 0..8 {
                            if ds.sensitive[j] == 1 && ds.label[j] == 0 && out.label[j] == 0 {
                                assert!(score_of[&ds.ids[i]] >= score_of[&ds.ids[j]]);
                            }
                        }
                    }
                    _ => {
                        for j in 0..8 {
                            if ds.sensitive[j] == 0 && ds.label[j] == 1 && out.label[j] == 1 {
                                assert!(score_of[&ds.ids[i]] <= score_of[&ds.ids[j]]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn massage_gap_bounded_by_flip_granularity_on_random_toys() {
        let mut rng = seeds::rng(4242);
        for trial in 0..200 {
            let n1 = rng.gen_range(5..25);
            let n0 = rng.gen_range(5..25);
            let p1 = rng.gen_range(1..n1);
            let p0 = rng.gen_range(1..n0);
            let ds = cells_ds(p1, n1 - p1, p0, n0 - p0);
            let (out, notes) = massage(&ds, trial).unwrap();
            let spd = ds.label_spd().unwrap();
            if spd >= 0.0 {
                assert_eq!(out.label, ds.label, "trial {trial}: no flips expected");
            } else {
                let gap = out.label_spd().unwrap();
                let bound = 1.0 / n1.min(n0) as f64 + 1e-12;
                assert!(
                    gap.abs() <= bound,
                    "trial {trial}: gap {gap} exceeds {bound} (n1={n1}, n0={n0})"
                );
            }
            if spd < 0.0 {
                // Oracle: flip count is twice the integer around the exact
                // root with the smaller residual, smaller count on a tie.
                let c = 1.0 / n1 as f64 + 1.0 / n0 as f64;
                let x = -spd / c;
                let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
                let best_m = if (spd + lo as f64 * c).abs() <= (spd + hi as f64 * c).abs() {
                    lo
                } else {
                    hi
                };
                let flips = (0..ds.n()).filter(|&i| out.label[i] != ds.label[i]).count();
                assert_eq!(flips, 2 * best_m, "trial {trial}");
                // The root always sits strictly below both availability caps
                // for count-based gaps, so saturation must never trigger.
                assert!(
                    !notes.iter().any(|n| n.contains("saturated")),
                    "trial {trial}: unexpected saturation"
                );
            }
        }
    }

    #[test]
    fn prepare_training_dispatch() {
        let ds = cells_ds(6, 6, 6, 6);
        let base = prepare_training(&ds, Method::Unmitigated, 0).unwrap();
        assert!(base.include_sensitive);
        assert_eq!(base.dataset, ds);
        let ftu = prepare_training(&ds, Method::Ftu, 0).unwrap();
        assert!(!ftu.include_sensitive);
        assert_eq!(ftu.dataset.label, ds.label);
        let rw = prepare_training(&ds, Method::Reweighing, 0).unwrap();
        assert!(rw.include_sensitive);
        assert!(prepare_training(&ds, Method::Eop, 0).is_err());
    }

    #[test]
    fn method_strings_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::MITIGATIONS.len(), 8);
        assert!(Method::Eop.is_post() && !Method::Eop.is_pre());
        assert!(Method::Reweighing.is_pre() && !Method::Reweighing.is_post());
        assert!(!Method::Unmitigated.is_pre() && !Method::Unmitigated.is_post());
    }
}
