//! Post-processing mitigation: transforms fitted on a validation fold's
//! predictions, then applied to any prediction made by the same base model.
//!
//! Three families:
//! - equalized-odds mixing: per group and per base label, output 1 with a
//!   fitted probability so both groups' expected TPR and FPR match;
//! - cost-equalizing interpolation: the cheaper-to-classify group is mixed
//!   toward a constant base-rate predictor until expected costs meet;
//! - margin flipping: inside an uncertainty band around a decision
//!   threshold, unprivileged rows go positive and privileged rows negative.
//!
//! Randomized processors keep the seed they were fitted with and fold it
//! into the per-id coin at apply time, so one fitted processor gives
//! bit-identical output for equal apply seeds regardless of row order.

use crate::error::Error;
use crate::metrics::Prediction;
use crate::scalar::Scalar;
use crate::seeds;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_ROC_BOUNDS: (f64, f64) = (-0.05, 0.05);
pub const DEFAULT_ROC_THRESHOLDS: usize = 100;
pub const DEFAULT_ROC_MARGINS: usize = 50;

/// Which per-group cost the interpolation equalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostConstraint {
    Fnr,
    Fpr,
    Weighted,
}

impl CostConstraint {
    pub fn as_str(self) -> &'static str {
        match self {
            CostConstraint::Fnr => "fnr",
            CostConstraint::Fpr => "fpr",
            CostConstraint::Weighted => "weighted",
        }
    }
}

impl fmt::Display for CostConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fnr" => Ok(CostConstraint::Fnr),
            "fpr" => Ok(CostConstraint::Fpr),
            "weighted" => Ok(CostConstraint::Weighted),
            other => Err(Error::InvalidInput(format!("unknown cost constraint {other}"))),
        }
    }
}

/// Which group gap the margin flipper keeps inside its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RocCriterion {
    Spd,
    Eqop,
    Avod,
}

impl RocCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            RocCriterion::Spd => "spd",
            RocCriterion::Eqop => "eqop",
            RocCriterion::Avod => "avod",
        }
    }
}

impl fmt::Display for RocCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted prediction transform. `fit_seed` is folded into apply-time
/// randomness so refitting with another seed changes the coins.
#[derive(Debug, Clone, PartialEq)]
pub enum PostProcessor<S> {
    /// `rates[group][base_label]` is the probability of outputting 1.
    EqOddsMix { rates: [[S; 2]; 2], fit_seed: u64 },
    /// Rows of `cheap_group` have their score replaced by `replacement`
    /// with probability `lambda`.
    CostInterpolate {
        cheap_group: u8,
        lambda: S,
        replacement: S,
        fit_seed: u64,
    },
    /// Rows with score within `margin` of `threshold` get their label from
    /// their group (unprivileged 1, privileged 0); the rest use the
    /// threshold. `feasible` records whether the fit met its bounds and
    /// `achieved` the criterion value at the chosen cell.
    MarginFlip {
        threshold: S,
        margin: S,
        criterion: RocCriterion,
        feasible: bool,
        achieved: S,
    },
}

impl<S: Scalar> PostProcessor<S> {
    /// One-line audit record of the fitted parameters.
    pub fn describe(&self) -> String {
        match self {
            PostProcessor::EqOddsMix { rates, fit_seed } => format!(
                "eq-odds mix: p(out=1 | group, base) = [[{:.6}, {:.6}], [{:.6}, {:.6}]], fit_seed={}",
                rates[0][0].to_f64_lossy(),
                rates[0][1].to_f64_lossy(),
                rates[1][0].to_f64_lossy(),
                rates[1][1].to_f64_lossy(),
                fit_seed
            ),
            PostProcessor::CostInterpolate {
                cheap_group,
                lambda,
                replacement,
                fit_seed,
            } => format!(
                "cost interpolation: group {} mixed toward constant {:.6} with lambda={:.6}, fit_seed={}",
                cheap_group,
                replacement.to_f64_lossy(),
                lambda.to_f64_lossy(),
                fit_seed
            ),
            PostProcessor::MarginFlip {
                threshold,
                margin,
                criterion,
                feasible,
                achieved,
            } => format!(
                "margin flip: threshold={:.6}, margin={:.6}, criterion={} at {:.6}, feasible={}",
                threshold.to_f64_lossy(),
                margin.to_f64_lossy(),
                criterion,
                achieved.to_f64_lossy(),
                feasible
            ),
        }
    }
}

fn check_group_vector(groups: &[u8], n: usize, what: &str) -> Result<()> {
    if groups.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} group values for {} rows ({what})",
            groups.len(),
            n
        )));
    }
    if groups.iter().any(|&g| g > 1) {
        return Err(Error::InvalidInput(format!("group values must be 0 or 1 ({what})")));
    }
    Ok(())
}

/// Per-(group, base prediction, truth) row counts plus group TPR/FPR.
struct OddsTable {
    count: [[[f64; 2]; 2]; 2],
    tpr: [f64; 2],
    fpr: [f64; 2],
    n: f64,
}

fn odds_table(pred_label: &[u8], truth: &[u8], groups: &[u8]) -> Result<OddsTable> {
    let mut count = [[[0.0f64; 2]; 2]; 2];
    for i in 0..truth.len() {
        count[groups[i] as usize][pred_label[i] as usize][truth[i] as usize] += 1.0;
    }
    let mut tpr = [0.0; 2];
    let mut fpr = [0.0; 2];
    for g in 0..2 {
        let pos = count[g][0][1] + count[g][1][1];
        let neg = count[g][0][0] + count[g][1][0];
        let pred_pos = count[g][1][0] + count[g][1][1];
        let pred_neg = count[g][0][0] + count[g][0][1];
        if pos == 0.0 || neg == 0.0 {
            return Err(Error::method_failed(
                "eop",
                format!("group {g} lacks a truth class in validation"),
            ));
        }
        if pred_pos == 0.0 || pred_neg == 0.0 {
            return Err(Error::method_failed(
                "eop",
                format!("group {g} has one-sided predictions in validation"),
            ));
        }
        tpr[g] = count[g][1][1] / pos;
        fpr[g] = count[g][1][0] / neg;
    }
    Ok(OddsTable {
        count,
        tpr,
        fpr,
        n: truth.len() as f64,
    })
}

/// Fits the equalized-odds mix on validation predictions: among all mixing
/// rates whose expected TPR and FPR match across groups, picks the vertex
/// with maximal expected accuracy, breaking ties by fewer expected flips and
/// then lexicographically.
pub fn fit_eop<S: Scalar>(
    pred_label: &[u8],
    truth: &[u8],
    groups: &[u8],
    seed: u64,
) -> Result<PostProcessor<S>> {
    let n = truth.len();
    if pred_label.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {n} truth labels",
            pred_label.len()
        )));
    }
    check_group_vector(groups, n, "eop fit")?;
    if n == 0 {
        return Err(Error::InvalidInput("eop needs validation rows".into()));
    }
    if pred_label.iter().chain(truth.iter()).any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let table = odds_table(pred_label, truth, groups)?;
    let (t0, t1) = (table.tpr[0], table.tpr[1]);
    let (f0, f1) = (table.fpr[0], table.fpr[1]);

    // Variables v = [p00, p01, p10, p11], p[group][base]. Two equalities:
    // expected TPR and FPR agree across groups.
    let rows = [
        [-(1.0 - t0), -t0, 1.0 - t1, t1],
        [-(1.0 - f0), -f0, 1.0 - f1, f1],
    ];
    let residual = |v: &[f64; 4], r: usize| -> f64 {
        (0..4).map(|k| rows[r][k] * v[k]).sum::<f64>()
    };

    let mut candidates: Vec<[f64; 4]> = Vec::new();
    for corner in 0..16u32 {
        let v = [
            (corner & 1) as f64,
            ((corner >> 1) & 1) as f64,
            ((corner >> 2) & 1) as f64,
            ((corner >> 3) & 1) as f64,
        ];
        if residual(&v, 0).abs() <= 1e-9 && residual(&v, 1).abs() <= 1e-9 {
            candidates.push(v);
        }
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let fixed: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
            for bits in 0..4u32 {
                let mut v = [0.0f64; 4];
                v[fixed[0]] = (bits & 1) as f64;
                v[fixed[1]] = ((bits >> 1) & 1) as f64;
                let a = [[rows[0][i], rows[0][j]], [rows[1][i], rows[1][j]]];
                let b = [
                    -(rows[0][fixed[0]] * v[fixed[0]] + rows[0][fixed[1]] * v[fixed[1]]),
                    -(rows[1][fixed[0]] * v[fixed[0]] + rows[1][fixed[1]] * v[fixed[1]]),
                ];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                if det.abs() <= 1e-12 {
                    continue;
                }
                let vi = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
                let vj = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
                if !(-1e-9..=1.0 + 1e-9).contains(&vi) || !(-1e-9..=1.0 + 1e-9).contains(&vj) {
                    continue;
                }
                v[i] = vi.clamp(0.0, 1.0);
                v[j] = vj.clamp(0.0, 1.0);
                candidates.push(v);
            }
        }
    }

    let accuracy = |v: &[f64; 4]| -> f64 {
        let mut correct = 0.0;
        for g in 0..2 {
            for b in 0..2 {
                let p = v[g * 2 + b];
                correct += p * table.count[g][b][1] + (1.0 - p) * table.count[g][b][0];
            }
        }
        correct / table.n
    };
    let flips = |v: &[f64; 4]| -> f64 {
        let mut f = 0.0;
        for g in 0..2 {
            let stay = table.count[g][1][0] + table.count[g][1][1];
            let go = table.count[g][0][0] + table.count[g][0][1];
            f += stay * (1.0 - v[g * 2 + 1]) + go * v[g * 2];
        }
        f / table.n
    };

    let mut best = candidates[0];
    for &v in &candidates[1..] {
        let da = accuracy(&v) - accuracy(&best);
        if da > 1e-12 {
            best = v;
            continue;
        }
        if da < -1e-12 {
            continue;
        }
        let df = flips(&v) - flips(&best);
        if df < -1e-12 {
            best = v;
            continue;
        }
        if df > 1e-12 {
            continue;
        }
        let lex_smaller = v
            .iter()
            .zip(best.iter())
            .find(|(a, b)| a != b)
            .map_or(false, |(a, b)| a < b);
        if lex_smaller {
            best = v;
        }
    }

    Ok(PostProcessor::EqOddsMix {
        rates: [
            [S::from_f64_lossy(best[0]), S::from_f64_lossy(best[1])],
            [S::from_f64_lossy(best[2]), S::from_f64_lossy(best[3])],
        ],
        fit_seed: seed,
    })
}

fn group_cost(
    constraint: CostConstraint,
    fnr: f64,
    fpr: f64,
    base_rate: f64,
) -> f64 {
    match constraint {
        CostConstraint::Fnr => fnr,
        CostConstraint::Fpr => fpr,
        CostConstraint::Weighted => base_rate * fnr + (1.0 - base_rate) * fpr,
    }
}

/// Fits the cost-equalizing interpolation: computes each group's cost at
/// threshold 0.5 on validation, then mixes the cheaper group toward its
/// constant base-rate predictor just far enough that expected costs meet.
pub fn fit_ceo<S: Scalar>(
    score: &[S],
    truth: &[u8],
    groups: &[u8],
    constraint: CostConstraint,
    seed: u64,
) -> Result<PostProcessor<S>> {
    let n = truth.len();
    if score.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {n} truth labels",
            score.len()
        )));
    }
    check_group_vector(groups, n, "ceo fit")?;
    if truth.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }

    // Confusion at threshold 0.5 per group.
    let mut pos = [0.0f64; 2];
    let mut neg = [0.0f64; 2];
    let mut fn_ = [0.0f64; 2];
    let mut fp = [0.0f64; 2];
    for i in 0..n {
        let g = groups[i] as usize;
        let predicted = score[i].to_f64_lossy() >= 0.5;
        if truth[i] == 1 {
            pos[g] += 1.0;
            if !predicted {
                fn_[g] += 1.0;
            }
        } else {
            neg[g] += 1.0;
            if predicted {
                fp[g] += 1.0;
            }
        }
    }
    let mut cost = [0.0f64; 2];
    let mut base_rate = [0.0f64; 2];
    for g in 0..2 {
        let needs_pos = matches!(constraint, CostConstraint::Fnr | CostConstraint::Weighted);
        let needs_neg = matches!(constraint, CostConstraint::Fpr | CostConstraint::Weighted);
        if (needs_pos && pos[g] == 0.0) || (needs_neg && neg[g] == 0.0) {
            return Err(Error::method_failed(
                "ceo",
                format!("group {g} lacks the truth classes the {constraint} cost needs"),
            ));
        }
        if pos[g] + neg[g] == 0.0 {
            return Err(Error::method_failed("ceo", format!("group {g} is empty")));
        }
        base_rate[g] = pos[g] / (pos[g] + neg[g]);
        let fnr = if pos[g] > 0.0 { fn_[g] / pos[g] } else { 0.0 };
        let fpr = if neg[g] > 0.0 { fp[g] / neg[g] } else { 0.0 };
        cost[g] = group_cost(constraint, fnr, fpr, base_rate[g]);
    }

    let cheap = if cost[1] <= cost[0] { 1usize } else { 0 };
    let other = 1 - cheap;
    // Trivial predictor of the cheap group: every score is the base rate.
    let triv_label_pos = base_rate[cheap] >= 0.5;
    let (triv_fnr, triv_fpr) = if triv_label_pos { (0.0, 1.0) } else { (1.0, 0.0) };
    let triv_cost = group_cost(constraint, triv_fnr, triv_fpr, base_rate[cheap]);

    let den = triv_cost - cost[cheap];
    let lambda = if den.abs() <= 1e-15 {
        0.0
    } else {
        ((cost[other] - cost[cheap]) / den).clamp(0.0, 1.0)
    };

    Ok(PostProcessor::CostInterpolate {
        cheap_group: cheap as u8,
        lambda: S::from_f64_lossy(lambda),
        replacement: S::from_f64_lossy(base_rate[cheap]),
        fit_seed: seed,
    })
}

/// Fits the margin flipper: scans a threshold grid and, per threshold, a
/// margin grid, keeping the cell with the best balanced accuracy among
/// those whose group gap lies inside `bounds`. If no cell qualifies, falls
/// back to the smallest absolute gap and records infeasibility. Ties prefer
/// smaller margins, then thresholds nearest 0.5, then smaller thresholds.
pub fn fit_roc<S: Scalar>(
    score: &[S],
    truth: &[u8],
    groups: &[u8],
    criterion: RocCriterion,
    bounds: (f64, f64),
    n_thresholds: usize,
    n_margins: usize,
) -> Result<PostProcessor<S>> {
    let n = truth.len();
    if score.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {n} truth labels",
            score.len()
        )));
    }
    check_group_vector(groups, n, "roc fit")?;
    if truth.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    if bounds.0 >= bounds.1 {
        return Err(Error::InvalidInput(format!(
            "criterion bounds must satisfy lower < upper, got [{}, {}]",
            bounds.0, bounds.1
        )));
    }
    if n_thresholds < 2 || n_margins < 2 {
        return Err(Error::InvalidInput("grids need at least two points".into()));
    }

    let mut group_n = [0.0f64; 2];
    let mut group_pos = [0.0f64; 2];
    for i in 0..n {
        group_n[groups[i] as usize] += 1.0;
        group_pos[groups[i] as usize] += truth[i] as f64;
    }
    let pos_all = group_pos[0] + group_pos[1];
    let neg_all = (group_n[0] + group_n[1]) - pos_all;
    if pos_all == 0.0 || neg_all == 0.0 {
        return Err(Error::method_failed(
            "roc",
            "validation truth has a single class, balanced accuracy undefined",
        ));
    }
    // Definedness of the gap depends only on group and class counts, so it
    // is uniform across the whole grid.
    let defined = match criterion {
        RocCriterion::Spd => group_n[0] > 0.0 && group_n[1] > 0.0,
        RocCriterion::Eqop => group_pos[0] > 0.0 && group_pos[1] > 0.0,
        RocCriterion::Avod => {
            group_pos[0] > 0.0
                && group_pos[1] > 0.0
                && group_n[0] > group_pos[0]
                && group_n[1] > group_pos[1]
        }
    };
    if !defined {
        return Err(Error::method_failed(
            "roc",
            format!("the {criterion} gap is undefined on every grid cell"),
        ));
    }

    let scores: Vec<f64> = score.iter().map(|s| s.to_f64_lossy()).collect();
    struct Cell {
        t: f64,
        theta: f64,
        bal_acc: f64,
        gap: f64,
    }
    let evaluate = |t: f64, theta: f64| -> Cell {
        let mut tp = [0.0f64; 2];
        let mut fp = [0.0f64; 2];
        let mut pp = [0.0f64; 2];
        for i in 0..n {
            let g = groups[i] as usize;
            let in_band = (scores[i] - t).abs() <= theta;
            let label = if in_band { groups[i] } else { (scores[i] >= t) as u8 };
            if label == 1 {
                pp[g] += 1.0;
                if truth[i] == 1 {
                    tp[g] += 1.0;
                } else {
                    fp[g] += 1.0;
                }
            }
        }
        let tpr_all = (tp[0] + tp[1]) / pos_all;
        let tnr_all = (neg_all - fp[0] - fp[1]) / neg_all;
        let dtpr = tp[1] / group_pos[1] - tp[0] / group_pos[0];
        let gap = match criterion {
            RocCriterion::Spd => pp[1] / group_n[1] - pp[0] / group_n[0],
            RocCriterion::Eqop => dtpr,
            RocCriterion::Avod => {
                let dfpr =
                    fp[1] / (group_n[1] - group_pos[1]) - fp[0] / (group_n[0] - group_pos[0]);
                (dfpr + dtpr) / 2.0
            }
        };
        Cell {
            t,
            theta,
            bal_acc: (tpr_all + tnr_all) / 2.0,
            gap,
        }
    };

    // (feasible cells ranked by balanced accuracy) and (all cells ranked by
    // absolute gap) share the same tie order.
    let better_tie = |c: &Cell, best: &Cell| -> bool {
        if c.theta != best.theta {
            return c.theta < best.theta;
        }
        let (dc, db) = ((c.t - 0.5).abs(), (best.t - 0.5).abs());
        if dc != db {
            return dc < db;
        }
        c.t < best.t
    };
    let mut best_feasible: Option<Cell> = None;
    let mut best_fallback: Option<Cell> = None;
    for i in 0..n_thresholds {
        let t = 0.01 + 0.98 * i as f64 / (n_thresholds - 1) as f64;
        let top = t.min(1.0 - t);
        for j in 1..=n_margins {
            let theta = j as f64 * top / n_margins as f64;
            let cell = evaluate(t, theta);
            if cell.gap >= bounds.0 && cell.gap <= bounds.1 {
                let take = match &best_feasible {
                    None => true,
                    Some(b) => {
                        cell.bal_acc > b.bal_acc
                            || (cell.bal_acc == b.bal_acc && better_tie(&cell, b))
                    }
                };
                if take {
                    best_feasible = Some(cell);
                    continue;
                }
            } else {
                let take = match &best_fallback {
                    None => true,
                    Some(b) => {
                        cell.gap.abs() < b.gap.abs()
                            || (cell.gap.abs() == b.gap.abs() && better_tie(&cell, b))
                    }
                };
                if take {
                    best_fallback = Some(cell);
                }
            }
        }
    }

    let (chosen, feasible) = match best_feasible {
        Some(c) => (c, true),
        None => {
            let c = best_fallback.expect("grid has at least four cells");
            log::warn!(
                "margin flip: no cell satisfies {} in [{}, {}]; falling back to |gap| = {:.6}",
                criterion,
                bounds.0,
                bounds.1,
                c.gap.abs()
            );
            (c, false)
        }
    };
    Ok(PostProcessor::MarginFlip {
        threshold: S::from_f64_lossy(chosen.t),
        margin: S::from_f64_lossy(chosen.theta),
        criterion,
        feasible,
        achieved: S::from_f64_lossy(chosen.gap),
    })
}

/// Applies a fitted processor to a prediction. `groups` is aligned with
/// `pred.ids`. The same `(processor, prediction, seed)` triple always gives
/// the same output; the coins are keyed by row id, not position.
pub fn apply<S: Scalar>(
    post: &PostProcessor<S>,
    pred: &Prediction<S>,
    groups: &[u8],
    seed: u64,
) -> Result<Prediction<S>> {
    check_group_vector(groups, pred.ids.len(), "apply")?;
    match post {
        PostProcessor::EqOddsMix { rates, fit_seed } => {
            let coin_seed = seeds::mix_str(seeds::mix(seed, *fit_seed), "eq-odds-coin");
            let label: Vec<u8> = pred
                .ids
                .iter()
                .zip(pred.label.iter())
                .zip(groups.iter())
                .map(|((&id, &base), &g)| {
                    let p = rates[g as usize][base as usize].to_f64_lossy();
                    (seeds::per_id_uniform(coin_seed, id) <= p) as u8
                })
                .collect();
            Prediction::new(pred.ids.clone(), label, None)
        }
        PostProcessor::CostInterpolate {
            cheap_group,
            lambda,
            replacement,
            fit_seed,
        } => {
            let score = pred.score.as_ref().ok_or_else(|| {
                Error::InvalidInput("cost interpolation needs prediction scores".into())
            })?;
            let coin_seed = seeds::mix_str(seeds::mix(seed, *fit_seed), "cost-interp-coin");
            let lam = lambda.to_f64_lossy();
            let mut new_score = score.clone();
            let mut label = pred.label.clone();
            for i in 0..pred.ids.len() {
                if groups[i] == *cheap_group
                    && seeds::per_id_uniform(coin_seed, pred.ids[i]) <= lam
                {
                    new_score[i] = *replacement;
                    label[i] = (new_score[i] >= S::from_f64_lossy(0.5)) as u8;
                }
            }
            Prediction::new(pred.ids.clone(), label, Some(new_score))
        }
        PostProcessor::MarginFlip {
            threshold, margin, ..
        } => {
            let score = pred.score.as_ref().ok_or_else(|| {
                Error::InvalidInput("margin flipping needs prediction scores".into())
            })?;
            let label: Vec<u8> = score
                .iter()
                .zip(groups.iter())
                .map(|(&s, &g)| {
                    if (s - *threshold).abs() <= *margin {
                        g
                    } else {
                        (s >= *threshold) as u8
                    }
                })
                .collect();
            Prediction::new(pred.ids.clone(), label, None)
        }
    }
}
