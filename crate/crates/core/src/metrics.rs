//! Evaluation measures: accuracy, balanced accuracy, group fairness gaps,
//! nearest-neighbour consistency, and a generalized entropy index over
//! prediction benefits.
//!
//! Every measure returns `Option`: `None` marks a mathematically undefined
//! value (empty denominator, missing group, one-class truth). Substituting 0
//! would fabricate a perfectly fair reading exactly in the situations where a
//! bias process has wiped out one group, so undefined stays explicit all the
//! way into the result tables.
//!
//! Sign convention throughout: differences are unprivileged minus privileged.

use crate::data::{Dataset, EncodedMatrix, Encoder};
use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;
use std::collections::BTreeSet;

/// Neighbour count used by [`bcc`] unless a caller overrides it.
pub const DEFAULT_BCC_K: usize = 5;
/// Consistency cutoff used by [`bcc`] unless a caller overrides it.
pub const DEFAULT_BCC_DELTA: f64 = 0.8;

/// Model output aligned to instance ids: a hard label per instance and,
/// when the model produces one, a score in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S> {
    pub ids: Vec<u64>,
    pub label: Vec<u8>,
    pub score: Option<Vec<S>>,
}

impl<S: Scalar> Prediction<S> {
    pub fn new(ids: Vec<u64>, label: Vec<u8>, score: Option<Vec<S>>) -> Result<Self> {
        if label.len() != ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} ids",
                label.len(),
                ids.len()
            )));
        }
        if label.iter().any(|&y| y > 1) {
            return Err(Error::InvalidInput("predicted labels must be binary".into()));
        }
        if let Some(s) = &score {
            if s.len() != ids.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} scores for {} ids",
                    s.len(),
                    ids.len()
                )));
            }
            if s.iter()
                .any(|v| !v.is_finite() || *v < S::zero() || *v > S::one())
            {
                return Err(Error::InvalidInput(
                    "prediction scores must lie in [0, 1]".into(),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::InvalidInput(format!("duplicate prediction id {id}")));
            }
        }
        Ok(Prediction { ids, label, score })
    }

    /// Builds a prediction from scores; the hard label is `score >= 0.5`.
    pub fn from_scores(ids: Vec<u64>, score: Vec<S>) -> Result<Self> {
        let half = S::from_f64_lossy(0.5);
        let label = score.iter().map(|&s| u8::from(s >= half)).collect();
        Prediction::new(ids, label, Some(score))
    }

    /// Labels reordered to match `ids`; any id absent from the prediction is
    /// an error, never dropped.
    pub fn labels_for(&self, ids: &[u64]) -> Result<Vec<u8>> {
        let index: std::collections::HashMap<u64, usize> =
            self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id)
                    .map(|&i| self.label[i])
                    .ok_or(Error::UnknownId(*id))
            })
            .collect()
    }

    /// Scores reordered to match `ids`; `None` when the model produced no
    /// scores.
    pub fn scores_for(&self, ids: &[u64]) -> Result<Option<Vec<S>>> {
        let Some(score) = &self.score else {
            return Ok(None);
        };
        let index: std::collections::HashMap<u64, usize> =
            self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let out: Result<Vec<S>> = ids
            .iter()
            .map(|id| {
                index
                    .get(id)
                    .map(|&i| score[i])
                    .ok_or(Error::UnknownId(*id))
            })
            .collect();
        Ok(Some(out?))
    }
}

/// The full measure suite for one (prediction, ground truth) pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport<S> {
    pub accuracy: Option<S>,
    pub balanced_accuracy: Option<S>,
    pub spd: Option<S>,
    pub eq_odds: Option<S>,
    pub avg_odds: Option<S>,
    pub eq_opp: Option<S>,
    pub fnr_diff: Option<S>,
    pub fpr_diff: Option<S>,
    pub bcc: Option<S>,
    pub gei: Option<S>,
}

/// Column names of the measure suite, in report order.
pub const METRIC_NAMES: [&str; 10] = [
    "accuracy",
    "balanced_accuracy",
    "spd",
    "eq_odds",
    "avg_odds",
    "eq_opp",
    "fnr_diff",
    "fpr_diff",
    "bcc",
    "gei",
];

impl<S: Scalar> MetricReport<S> {
    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [Option<S>; 10] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.spd,
            self.eq_odds,
            self.avg_odds,
            self.eq_opp,
            self.fnr_diff,
            self.fpr_diff,
            self.bcc,
            self.gei,
        ]
    }

    /// Value by metric name, `Err` for an unknown name.
    pub fn value(&self, name: &str) -> Result<Option<S>> {
        let pos = METRIC_NAMES
            .iter()
            .position(|&m| m == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric {name}")))?;
        Ok(self.values()[pos])
    }
}

/// Fraction of predictions that match the truth.
pub fn accuracy<S: Scalar>(y_hat: &[u8], y: &[u8]) -> Option<S> {
    assert_eq!(y_hat.len(), y.len(), "prediction/truth length mismatch");
    if y.is_empty() {
        return None;
    }
    let correct = y_hat.iter().zip(y).filter(|(a, b)| a == b).count();
    Some(S::from_usize(correct).unwrap() / S::from_usize(y.len()).unwrap())
}

/// Mean of the true positive and true negative rates; undefined when the
/// truth contains only one class.
pub fn balanced_accuracy<S: Scalar>(y_hat: &[u8], y: &[u8]) -> Option<S> {
    assert_eq!(y_hat.len(), y.len(), "prediction/truth length mismatch");
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut pos = 0usize;
    let mut neg = 0usize;
    for (&p, &t) in y_hat.iter().zip(y) {
        if t == 1 {
            pos += 1;
            if p == 1 {
                tp += 1;
            }
        } else {
            neg += 1;
            if p == 0 {
                tn += 1;
            }
        }
    }
    if pos == 0 || neg == 0 {
        return None;
    }
    let tpr = S::from_usize(tp).unwrap() / S::from_usize(pos).unwrap();
    let tnr = S::from_usize(tn).unwrap() / S::from_usize(neg).unwrap();
    Some((tpr + tnr) / S::from_f64_lossy(2.0))
}

/// Statistical parity difference of the predictions: positive-prediction rate
/// of the unprivileged group minus that of the privileged group. Truth plays
/// no part, so label corruption cannot move this measure.
pub fn spd<S: Scalar>(y_hat: &[u8], groups: &[u8]) -> Option<S> {
    assert_eq!(y_hat.len(), groups.len(), "prediction/group length mismatch");
    let mut n = [0usize; 2];
    let mut pos = [0usize; 2];
    for (&p, &g) in y_hat.iter().zip(groups) {
        let g = g as usize;
        n[g] += 1;
        if p == 1 {
            pos[g] += 1;
        }
    }
    if n[0] == 0 || n[1] == 0 {
        return None;
    }
    let rate = |g: usize| S::from_usize(pos[g]).unwrap() / S::from_usize(n[g]).unwrap();
    Some(rate(1) - rate(0))
}

/// The error-rate gap family derived from per-group TPR and FPR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsMetrics<S> {
    /// max(|ΔTPR|, |ΔFPR|)
    pub eq_odds: Option<S>,
    /// (ΔTPR + ΔFPR) / 2
    pub avg_odds: Option<S>,
    /// ΔTPR
    pub eq_opp: Option<S>,
    /// ΔFNR
    pub fnr_diff: Option<S>,
    /// ΔFPR
    pub fpr_diff: Option<S>,
}

/// Per-group confusion counts: [group][truth][prediction].
fn confusion(y_hat: &[u8], y: &[u8], groups: &[u8]) -> [[[usize; 2]; 2]; 2] {
    let mut c = [[[0usize; 2]; 2]; 2];
    for i in 0..y.len() {
        c[groups[i] as usize][y[i] as usize][y_hat[i] as usize] += 1;
    }
    c
}

/// Computes the five odds-based gaps. Each output that needs a rate with an
/// empty denominator is undefined on its own; the others still come back.
pub fn odds_metrics<S: Scalar>(y_hat: &[u8], y: &[u8], groups: &[u8]) -> OddsMetrics<S> {
    assert_eq!(y_hat.len(), y.len(), "prediction/truth length mismatch");
    assert_eq!(y_hat.len(), groups.len(), "prediction/group length mismatch");
    let c = confusion(y_hat, y, groups);
    let tpr = |g: usize| -> Option<S> {
        let pos = c[g][1][0] + c[g][1][1];
        (pos > 0).then(|| S::from_usize(c[g][1][1]).unwrap() / S::from_usize(pos).unwrap())
    };
    let fpr = |g: usize| -> Option<S> {
        let neg = c[g][0][0] + c[g][0][1];
        (neg > 0).then(|| S::from_usize(c[g][0][1]).unwrap() / S::from_usize(neg).unwrap())
    };
    let d_tpr = match (tpr(1), tpr(0)) {
        (Some(u), Some(p)) => Some(u - p),
        _ => None,
    };
    let d_fpr = match (fpr(1), fpr(0)) {
        (Some(u), Some(p)) => Some(u - p),
        _ => None,
    };
    OddsMetrics {
        eq_odds: match (d_tpr, d_fpr) {
            (Some(t), Some(f)) => Some(t.abs().max(f.abs())),
            _ => None,
        },
        avg_odds: match (d_tpr, d_fpr) {
            (Some(t), Some(f)) => Some((t + f) / S::from_f64_lossy(2.0)),
            _ => None,
        },
        eq_opp: d_tpr,
        // FNR = 1 - TPR, so the FNR gap is the negated TPR gap.
        fnr_diff: d_tpr.map(|t| -t),
        fpr_diff: d_fpr,
    }
}

/// Nearest-neighbour consistency with a cutoff.
///
/// For each instance, the consistency score is one minus the absolute gap
/// between its predicted label and the mean prediction of its `k` nearest
/// neighbours (Euclidean distance on `features`, self excluded, distance ties
/// broken toward the lower instance id). Scores below `delta` are zeroed; the
/// result is the mean of the censored scores. Undefined when there are fewer
/// than `k + 1` instances.
///
/// `y_hat` must align with `features.ids` row for row, and the feature
/// encoding must exclude the sensitive column: the whole point is to compare
/// instances that are close *ignoring* group membership.
pub fn bcc<S: Scalar>(y_hat: &[u8], features: &EncodedMatrix<S>, k: usize, delta: S) -> Option<S> {
    assert_eq!(y_hat.len(), features.n(), "prediction/feature row mismatch");
    let n = features.n();
    if k == 0 || n < k + 1 {
        return None;
    }
    let consistency = |i: usize| -> S {
        let xi = features.row(i);
        let mut cand: Vec<(S, u64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let xj = features.row(j);
                let mut d2 = S::zero();
                for c in 0..features.width {
                    let diff = xi[c] - xj[c];
                    d2 += diff * diff;
                }
                (d2, features.ids[j], j)
            })
            .collect();
        cand.select_nth_unstable_by(k - 1, |a, b| {
            a.0.cmp_total(&b.0).then(a.1.cmp(&b.1))
        });
        let mut neigh_pos = 0usize;
        for &(_, _, j) in &cand[..k] {
            neigh_pos += y_hat[j] as usize;
        }
        let mean = S::from_usize(neigh_pos).unwrap() / S::from_usize(k).unwrap();
        S::one() - (S::from_u8(y_hat[i]).unwrap() - mean).abs()
    };
    let mut total = S::zero();
    for i in 0..n {
        let c = consistency(i);
        if c >= delta {
            total += c;
        }
    }
    Some(total / S::from_usize(n).unwrap())
}

/// Generalized entropy index of prediction benefits, order 2.
///
/// The benefit of an instance is `prediction - truth + 1` (0 for a false
/// negative, 1 for a correct prediction, 2 for a false positive). Undefined
/// when the mean benefit is zero, which requires every row to be a false
/// negative.
pub fn gei<S: Scalar>(y_hat: &[u8], y: &[u8]) -> Option<S> {
    assert_eq!(y_hat.len(), y.len(), "prediction/truth length mismatch");
    if y.is_empty() {
        return None;
    }
    let n = S::from_usize(y.len()).unwrap();
    let benefits: Vec<S> = y_hat
        .iter()
        .zip(y)
        .map(|(&p, &t)| S::from_i32(p as i32 - t as i32 + 1).unwrap())
        .collect();
    let mu = benefits.iter().copied().sum::<S>() / n;
    if mu <= S::zero() {
        return None;
    }
    let sum = benefits
        .iter()
        .map(|&b| {
            let r = b / mu;
            r * r - S::one()
        })
        .sum::<S>();
    Some(sum / (S::from_f64_lossy(2.0) * n))
}

/// Computes the full report for one prediction against one dataset view.
///
/// Rows are taken in ascending id order; the consistency measure encodes the
/// view's own rows (sensitive column excluded) with statistics fitted on
/// those same rows.
pub fn report_on<S: Scalar>(
    pred: &Prediction<S>,
    view: &Dataset<S>,
    k: usize,
    delta: S,
) -> Result<MetricReport<S>> {
    let ids: BTreeSet<u64> = view.ids.iter().copied().collect();
    let ordered: Vec<u64> = ids.iter().copied().collect();
    let y_hat = pred.labels_for(&ordered)?;
    let index = view.id_index();
    let mut y = Vec::with_capacity(ordered.len());
    let mut groups = Vec::with_capacity(ordered.len());
    for id in &ordered {
        let i = index[id];
        y.push(view.label[i]);
        groups.push(view.sensitive[i]);
    }
    let odds = odds_metrics::<S>(&y_hat, &y, &groups);
    let bcc_value = if view.n() >= k + 1 {
        let enc = Encoder::fit(view, &ids, false)?;
        let matrix = enc.transform(view, &ids)?;
        bcc(&y_hat, &matrix, k, delta)
    } else {
        None
    };
    Ok(MetricReport {
        accuracy: accuracy(&y_hat, &y),
        balanced_accuracy: balanced_accuracy(&y_hat, &y),
        spd: spd(&y_hat, &groups),
        eq_odds: odds.eq_odds,
        avg_odds: odds.avg_odds,
        eq_opp: odds.eq_opp,
        fnr_diff: odds.fnr_diff,
        fpr_diff: odds.fpr_diff,
        bcc: bcc_value,
        gei: gei(&y_hat, &y),
    })
}

/// Evaluates one prediction twice: against the untouched fair rows and
/// against the biased view of the same rows. The prediction must cover every
/// id in both views.
pub fn evaluate<S: Scalar>(
    pred: &Prediction<S>,
    fair_view: &Dataset<S>,
    biased_view: &Dataset<S>,
) -> Result<(MetricReport<S>, MetricReport<S>)> {
    let delta = S::from_f64_lossy(DEFAULT_BCC_DELTA);
    let fair = report_on(pred, fair_view, DEFAULT_BCC_K, delta)?;
    let biased = report_on(pred, biased_view, DEFAULT_BCC_K, delta)?;
    Ok((fair, biased))
}
