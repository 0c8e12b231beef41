//! Experiment orchestration: for every bias kind, intensity level, and fold
//! rotation, trains models on biased training views (with or without
//! mitigation), evaluates each on the untouched fair test fold and on the
//! biased view of the same fold, and emits one flat record per evaluation.
//!
//! The fairness premise baked into the flow: only biased data is observable
//! before deployment, so mitigation (including post-processor fitting on the
//! validation fold) sees biased views exclusively, while the fair test fold
//! exists purely to measure what deployment would have looked like in the
//! unbiased world.

use crate::bias::{biased_view, BiasKind, BiasSpec};
use crate::data::{make_fold_plan, Dataset, FoldPlan};
use crate::error::Error;
use crate::learn::{fit_forest_on, ForestParams, TrainedModel};
use crate::metrics::{evaluate, MetricReport};
use crate::mitigate::{
    apply, fit_ceo, fit_eop, fit_roc, prepare_training, CostConstraint, Method, PostProcessor,
    RocCriterion, DEFAULT_ROC_BOUNDS, DEFAULT_ROC_MARGINS, DEFAULT_ROC_THRESHOLDS,
};
use crate::scalar::{mean, pop_std, Scalar};
use crate::seeds;
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

/// Fold counts chosen so selection bias leaves enough test rows per fold.
pub const LABEL_BIAS_FOLDS: usize = 10;
pub const SELECTION_BIAS_FOLDS: usize = 5;

/// Everything one experiment sweep needs besides the dataset itself.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kinds: Vec<BiasKind>,
    /// Bias intensity grid, ascending within [0, 1].
    pub levels: Vec<f64>,
    /// Overrides the per-kind fold default when set.
    pub n_folds: Option<usize>,
    /// Mitigation methods to run next to the unmitigated baseline.
    pub methods: Vec<Method>,
    /// Forest shape; the seed field is replaced per cell.
    pub forest: ForestParams,
    /// Label-noise width used by the label bias kind.
    pub noise: f64,
    pub ceo_cost: CostConstraint,
    pub roc_bounds: (f64, f64),
    pub roc_thresholds: usize,
    pub roc_margins: usize,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn new(kinds: Vec<BiasKind>, levels: Vec<f64>, master_seed: u64) -> Self {
        ExperimentPlan {
            kinds,
            levels,
            n_folds: None,
            methods: Method::MITIGATIONS.to_vec(),
            forest: ForestParams::new(100, 0),
            noise: 0.1,
            ceo_cost: CostConstraint::Weighted,
            roc_bounds: DEFAULT_ROC_BOUNDS,
            roc_thresholds: DEFAULT_ROC_THRESHOLDS,
            roc_margins: DEFAULT_ROC_MARGINS,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::InvalidInput("plan needs at least one bias kind".into()));
        }
        let mut seen_kinds = BTreeSet::new();
        for k in &self.kinds {
            if !seen_kinds.insert(k.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate bias kind {k}")));
            }
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("plan needs at least one level".into()));
        }
        for w in self.levels.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput("levels must be strictly ascending".into()));
            }
        }
        if self
            .levels
            .iter()
            .any(|l| !l.is_finite() || !(0.0..=1.0).contains(l))
        {
            return Err(Error::InvalidInput("levels must lie in [0, 1]".into()));
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            if *m == Method::Unmitigated {
                return Err(Error::InvalidInput(
                    "the baseline always runs; list only mitigation methods".into(),
                ));
            }
            if !seen.insert(*m) {
                return Err(Error::InvalidInput(format!("duplicate method {m}")));
            }
        }
        if let Some(k) = self.n_folds {
            if k < 3 {
                return Err(Error::InvalidInput("fold override must be at least 3".into()));
            }
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::InvalidInput("noise width must be finite and >= 0".into()));
        }
        if self.roc_bounds.0 >= self.roc_bounds.1 {
            return Err(Error::InvalidInput(
                "roc bounds must satisfy lower < upper".into(),
            ));
        }
        if self.roc_thresholds < 2 || self.roc_margins < 2 {
            return Err(Error::InvalidInput("roc grids need at least two points".into()));
        }
        Ok(())
    }

    /// Fold count for a kind: the override, or 10 for label bias and 5 for
    /// the selection kinds (which shrink test folds).
    pub fn folds_for(&self, kind: BiasKind) -> usize {
        self.n_folds.unwrap_or(match kind {
            BiasKind::Label => LABEL_BIAS_FOLDS,
            _ => SELECTION_BIAS_FOLDS,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Fair,
    Biased,
}

impl EvalMode {
    pub const ALL: [EvalMode; 2] = [EvalMode::Fair, EvalMode::Biased];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Fair => "fair",
            EvalMode::Biased => "biased",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fair" => Ok(EvalMode::Fair),
            "biased" => Ok(EvalMode::Biased),
            other => Err(Error::InvalidInput(format!("unknown eval mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    MethodFailed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::MethodFailed => "method_failed",
        }
    }
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CellStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(CellStatus::Ok),
            "method_failed" => Ok(CellStatus::MethodFailed),
            other => Err(Error::InvalidInput(format!("unknown cell status {other:?}"))),
        }
    }
}

/// One evaluation of one planned cell. Failed cells carry no values.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub dataset: String,
    pub kind: BiasKind,
    pub level: f64,
    pub method: Method,
    pub fold: u32,
    pub eval_mode: EvalMode,
    pub status: CellStatus,
    pub metrics: Option<MetricReport<f64>>,
    /// Fraction of forest trees that split on a sensitive column.
    pub sensitive_usage: Option<f64>,
}

/// Records plus the run's audit trail (fitted mitigation parameters,
/// saturation notes, failure reasons), both deterministically ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub audit: Vec<String>,
}

/// Narrows a metric report to the `f64` interchange type used by records.
pub fn report_to_f64<S: Scalar>(r: &MetricReport<S>) -> MetricReport<f64> {
    let v = r.values().map(|o| o.map(|x| x.to_f64_lossy()));
    report_from_values(v)
}

/// Rebuilds a report from values ordered as in [`crate::metrics::METRIC_NAMES`].
pub fn report_from_values(v: [Option<f64>; 10]) -> MetricReport<f64> {
    MetricReport {
        accuracy: v[0],
        balanced_accuracy: v[1],
        spd: v[2],
        eq_odds: v[3],
        avg_odds: v[4],
        eq_opp: v[5],
        fnr_diff: v[6],
        fpr_diff: v[7],
        bcc: v[8],
        gei: v[9],
    }
}

fn seed_base(master: u64, dataset: &str, kind: BiasKind) -> u64 {
    seeds::mix_str(seeds::mix_str(master, dataset), kind.as_str())
}

fn cell_seed(base: u64, level: f64, fold: u32, method: Method) -> u64 {
    let s = seeds::mix(base, level.to_bits());
    let s = seeds::mix(s, fold as u64);
    seeds::mix_str(s, method.as_str())
}

struct CellKey<'a> {
    dataset: &'a str,
    kind: BiasKind,
    level: f64,
    fold: u32,
}

impl CellKey<'_> {
    fn records(
        &self,
        method: Method,
        status: CellStatus,
        fair: Option<MetricReport<f64>>,
        biased: Option<MetricReport<f64>>,
        usage: Option<f64>,
    ) -> [ResultRecord; 2] {
        let make = |eval_mode, metrics| ResultRecord {
            dataset: self.dataset.to_string(),
            kind: self.kind,
            level: self.level,
            method,
            fold: self.fold,
            eval_mode,
            status,
            metrics,
            sensitive_usage: usage,
        };
        [make(EvalMode::Fair, fair), make(EvalMode::Biased, biased)]
    }

    fn ok(
        &self,
        method: Method,
        fair: MetricReport<f64>,
        biased: MetricReport<f64>,
        usage: Option<f64>,
    ) -> [ResultRecord; 2] {
        self.records(method, CellStatus::Ok, Some(fair), Some(biased), usage)
    }

    fn failed(&self, method: Method) -> [ResultRecord; 2] {
        self.records(method, CellStatus::MethodFailed, None, None, None)
    }

    fn tag(&self, method: Method) -> String {
        format!(
            "{} kind={} level={} fold={} method={}",
            self.dataset, self.kind, self.level, self.fold, method
        )
    }
}

fn usage_of<S: Scalar>(model: &TrainedModel<S>) -> Option<f64> {
    if model.uses_sensitive_input() {
        model.sensitive_usage().ok().map(|u| u.to_f64_lossy())
    } else {
        Some(0.0)
    }
}

fn id_set<S: Scalar>(ds: &Dataset<S>) -> BTreeSet<u64> {
    ds.ids.iter().copied().collect()
}

fn assert_test_isolated(fit_ids: &[u64], test_ids: &BTreeSet<u64>, what: &str) {
    for id in fit_ids {
        assert!(
            !test_ids.contains(id),
            "test fold leaked into {what}: id {id}"
        );
    }
}

/// Runs one (kind, level, rotation) cell: trains the baseline and every
/// planned method, evaluates each fair and biased, and never aborts on a
/// method-level failure.
#[allow(clippy::too_many_arguments)]
fn run_cell<S: Scalar>(
    ds: &Dataset<S>,
    plan: &ExperimentPlan,
    folds: &FoldPlan,
    kind: BiasKind,
    level: f64,
    fold: u32,
    base: u64,
) -> Result<(Vec<ResultRecord>, Vec<String>)> {
    let key = CellKey {
        dataset: &ds.name,
        kind,
        level,
        fold,
    };
    let mut records = Vec::new();
    let mut audit = Vec::new();

    let rotation = folds.rotated(fold);
    let test_ids = rotation.test_ids();
    let val_ids = rotation.validation_ids();
    let train_ids = rotation.train_pool_ids();

    let fair_test = ds.subset_by_ids(&test_ids)?;
    let fair_val = ds.subset_by_ids(&val_ids)?;
    let fair_train = ds.subset_by_ids(&train_ids)?;
    let spec = BiasSpec::new(kind, level, plan.noise, seeds::mix_str(base, "bias-priority"))?;
    let biased_train = biased_view(&fair_train, &spec)?;
    let biased_val = biased_view(&fair_val, &spec)?;
    let biased_test = biased_view(&fair_test, &spec)?;

    if biased_train.n() == 0 {
        audit.push(format!(
            "{}: biased training view is empty, every cell fails",
            key.tag(Method::Unmitigated)
        ));
        records.extend(key.failed(Method::Unmitigated));
        for &m in &plan.methods {
            records.extend(key.failed(m));
        }
        return Ok((records, audit));
    }

    let mut base_params = plan.forest;
    base_params.seed = cell_seed(base, level, fold, Method::Unmitigated);
    let model = fit_forest_on(&biased_train, &id_set(&biased_train), true, &base_params)?;
    assert_test_isolated(&model.fit_ids, &test_ids, "baseline training");
    let pred_test = model.predict(ds, &test_ids)?;
    let (fair_r, biased_r) = evaluate(&pred_test, &fair_test, &biased_test)?;
    let base_usage = usage_of(&model);
    records.extend(key.ok(
        Method::Unmitigated,
        report_to_f64(&fair_r),
        report_to_f64(&biased_r),
        base_usage,
    ));

    for &method in &plan.methods {
        let seed_m = cell_seed(base, level, fold, method);
        if method.is_pre() {
            let prep = match prepare_training(&biased_train, method, seed_m) {
                Ok(p) => p,
                Err(e) if e.is_method_failure() => {
                    audit.push(format!("{}: {e}", key.tag(method)));
                    records.extend(key.failed(method));
                    continue;
                }
                Err(e) => return Err(e),
            };
            for note in &prep.notes {
                audit.push(format!("{}: {note}", key.tag(method)));
            }
            // The bootstrap seed is shared across methods within a cell, so
            // methods are compared on common draws and a transform that
            // leaves the training view unchanged reproduces the baseline
            // forest exactly. Method-specific randomness stays in seed_m.
            let mut params = plan.forest;
            params.seed = base_params.seed;
            let fitted = fit_forest_on(
                &prep.dataset,
                &id_set(&prep.dataset),
                prep.include_sensitive,
                &params,
            )?;
            assert_test_isolated(&fitted.fit_ids, &test_ids, "mitigated training");
            let pred = fitted.predict(ds, &test_ids)?;
            let (f, b) = evaluate(&pred, &fair_test, &biased_test)?;
            records.extend(key.ok(
                method,
                report_to_f64(&f),
                report_to_f64(&b),
                usage_of(&fitted),
            ));
        } else {
            if biased_val.n() == 0 {
                audit.push(format!(
                    "{}: biased validation view is empty",
                    key.tag(method)
                ));
                records.extend(key.failed(method));
                continue;
            }
            let pred_val = model.predict(ds, &id_set(&biased_val))?;
            assert_test_isolated(&pred_val.ids, &test_ids, "post-processor fitting");
            let val_scores = pred_val
                .score
                .as_ref()
                .expect("forest predictions carry scores");
            let fitted: Result<PostProcessor<S>> = match method {
                Method::Eop => fit_eop(&pred_val.label, &biased_val.label, &biased_val.sensitive, seed_m),
                Method::Ceo => fit_ceo(
                    val_scores,
                    &biased_val.label,
                    &biased_val.sensitive,
                    plan.ceo_cost,
                    seed_m,
                ),
                Method::RocSpd | Method::RocEqop | Method::RocAvod => {
                    let criterion = match method {
                        Method::RocSpd => RocCriterion::Spd,
                        Method::RocEqop => RocCriterion::Eqop,
                        _ => RocCriterion::Avod,
                    };
                    fit_roc(
                        val_scores,
                        &biased_val.label,
                        &biased_val.sensitive,
                        criterion,
                        plan.roc_bounds,
                        plan.roc_thresholds,
                        plan.roc_margins,
                    )
                }
                _ => unreachable!("pre methods handled above"),
            };
            let post = match fitted {
                Ok(p) => p,
                Err(e) if e.is_method_failure() => {
                    audit.push(format!("{}: {e}", key.tag(method)));
                    records.extend(key.failed(method));
                    continue;
                }
                Err(e) => return Err(e),
            };
            audit.push(format!("{}: {}", key.tag(method), post.describe()));
            let out = apply(&post, &pred_test, &fair_test.sensitive, seed_m)?;
            let (f, b) = evaluate(&out, &fair_test, &biased_test)?;
            records.extend(key.ok(method, report_to_f64(&f), report_to_f64(&b), base_usage));
        }
    }
    let failed = records
        .iter()
        .filter(|r| r.status == CellStatus::MethodFailed)
        .count()
        / 2;
    log::info!(
        "{} {} level {} fold {}: {} methods, {} failed",
        ds.name,
        kind,
        level,
        fold,
        plan.methods.len() + 1,
        failed
    );
    Ok((records, audit))
}

/// Runs the full experiment matrix. Cells execute in parallel; the output is
/// sorted by key, so reruns with one master seed are bit-identical.
pub fn run<S: Scalar>(ds: &Dataset<S>, plan: &ExperimentPlan) -> Result<RunOutput> {
    plan.validate()?;
    let mut work = Vec::new();
    for &kind in &plan.kinds {
        let n_folds = plan.folds_for(kind);
        let base = seed_base(plan.master_seed, &ds.name, kind);
        let folds = make_fold_plan(ds, n_folds, seeds::mix_str(base, "fold-plan"))?;
        for &level in &plan.levels {
            for fold in 0..n_folds as u32 {
                work.push((kind, level, fold, base, folds.clone()));
            }
        }
    }
    let cell_outputs: Result<Vec<(Vec<ResultRecord>, Vec<String>)>> = work
        .par_iter()
        .map(|(kind, level, fold, base, folds)| {
            run_cell(ds, plan, folds, *kind, *level, *fold, *base)
        })
        .collect();
    let mut records = Vec::new();
    let mut audit = Vec::new();
    for (r, a) in cell_outputs? {
        records.extend(r);
        audit.extend(a);
    }
    sort_records(&mut records);
    audit.sort();
    Ok(RunOutput { records, audit })
}

/// Canonical record order: dataset, kind, level, method, fold, eval mode.
pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (a.dataset.as_str(), a.kind, a.level.to_bits(), a.method, a.fold, a.eval_mode).cmp(&(
            b.dataset.as_str(),
            b.kind,
            b.level.to_bits(),
            b.method,
            b.fold,
            b.eval_mode,
        ))
    });
}

/// Per-metric mean and population standard deviation over the ok folds of
/// one (dataset, kind, level, method, eval mode) cell group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord {
    pub dataset: String,
    pub kind: BiasKind,
    pub level: f64,
    pub method: Method,
    pub eval_mode: EvalMode,
    pub n_folds: u32,
    pub fail_count: u32,
    /// Majority-failure flag: more than half the folds failed.
    pub failed: bool,
    pub mean: MetricReport<f64>,
    pub std: MetricReport<f64>,
    pub usage_mean: Option<f64>,
    pub usage_std: Option<f64>,
}

/// Collapses fold records into aggregates. Metrics missing in some ok folds
/// average over the folds that define them; a group with no ok folds keeps
/// every value empty.
pub fn aggregate(records: &[ResultRecord]) -> Vec<AggregateRecord> {
    let mut groups: BTreeMap<(String, BiasKind, u64, Method, EvalMode), Vec<&ResultRecord>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.kind, r.level.to_bits(), r.method, r.eval_mode))
            .or_default()
            .push(r);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((dataset, kind, level_bits, method, eval_mode), rows) in groups {
        let n_folds = rows.len() as u32;
        let fail_count = rows
            .iter()
            .filter(|r| r.status == CellStatus::MethodFailed)
            .count() as u32;
        let ok_reports: Vec<&MetricReport<f64>> = rows
            .iter()
            .filter(|r| r.status == CellStatus::Ok)
            .filter_map(|r| r.metrics.as_ref())
            .collect();
        let mut means = [None; 10];
        let mut stds = [None; 10];
        for metric in 0..10 {
            let values: Vec<f64> = ok_reports
                .iter()
                .filter_map(|r| r.values()[metric])
                .collect();
            means[metric] = mean(&values);
            stds[metric] = pop_std(&values);
        }
        let usages: Vec<f64> = rows
            .iter()
            .filter(|r| r.status == CellStatus::Ok)
            .filter_map(|r| r.sensitive_usage)
            .collect();
        out.push(AggregateRecord {
            dataset,
            kind,
            level: f64::from_bits(level_bits),
            method,
            eval_mode,
            n_folds,
            fail_count,
            failed: 2 * fail_count > n_folds,
            mean: report_from_values(means),
            std: report_from_values(stds),
            usage_mean: mean(&usages),
            usage_std: pop_std(&usages),
        });
    }
    out
}

/// One fair-vs-biased point per (dataset, kind, level, method, metric).
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub dataset: String,
    pub kind: BiasKind,
    pub level: f64,
    pub method: Method,
    pub metric: &'static str,
    pub fair: f64,
    pub biased: f64,
    /// Marks values at or beyond magnitude 1, which a unit-square view clips.
    pub clipped: bool,
}

/// Pairs fair and biased aggregate means for scatter plotting. Groups where
/// either side failed or lacks the metric produce no point.
pub fn diagonal_scatter(aggregates: &[AggregateRecord]) -> Vec<ScatterPoint> {
    let mut by_key: BTreeMap<(String, BiasKind, u64, Method), [Option<&AggregateRecord>; 2]> =
        BTreeMap::new();
    for a in aggregates {
        let entry = by_key
            .entry((a.dataset.clone(), a.kind, a.level.to_bits(), a.method))
            .or_insert([None, None]);
        entry[match a.eval_mode {
            EvalMode::Fair => 0,
            EvalMode::Biased => 1,
        }] = Some(a);
    }
    let mut points = Vec::new();
    for ((dataset, kind, level_bits, method), pair) in by_key {
        let (Some(fair), Some(biased)) = (pair[0], pair[1]) else {
            continue;
        };
        if fair.failed || biased.failed {
            continue;
        }
        for (metric, (f, b)) in crate::metrics::METRIC_NAMES
            .iter()
            .zip(fair.mean.values().iter().zip(biased.mean.values().iter()))
        {
            let (Some(f), Some(b)) = (f, b) else { continue };
            points.push(ScatterPoint {
                dataset: dataset.clone(),
                kind,
                level: f64::from_bits(level_bits),
                method,
                metric,
                fair: *f,
                biased: *b,
                clipped: f.abs() >= 1.0 || b.abs() >= 1.0,
            });
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Feature, FeatureData};
    use crate::synthetic::make_synthetic;

    fn tiny_plan(kinds: Vec<BiasKind>, levels: Vec<f64>, methods: Vec<Method>) -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(kinds, levels, 11);
        plan.methods = methods;
        plan.n_folds = Some(3);
        plan.forest = ForestParams::new(5, 0);
        plan
    }

    #[test]
    fn run_shape_and_level_zero_identity() {
        let ds: Dataset<f64> = make_synthetic(160, 3).unwrap();
        let plan = tiny_plan(
            vec![BiasKind::Label],
            vec![0.0, 0.6],
            vec![Method::Reweighing, Method::Ftu],
        );
        let out = run(&ds, &plan).unwrap();
        // 1 kind x 2 levels x 3 methods x 3 folds x 2 modes.
        assert_eq!(out.records.len(), 36);
        assert!(out.records.iter().all(|r| r.status == CellStatus::Ok));
        for r in &out.records {
            assert!(r.metrics.is_some());
            assert!(r.sensitive_usage.is_some());
            if r.method == Method::Ftu {
                assert_eq!(r.sensitive_usage, Some(0.0));
            }
        }
        // Level 0 never alters the view, so both evaluations coincide.
        for chunk in out.records.chunks(2) {
            let (fair, biased) = (&chunk[0], &chunk[1]);
            assert_eq!(fair.eval_mode, EvalMode::Fair);
            assert_eq!(biased.eval_mode, EvalMode::Biased);
            if fair.level == 0.0 {
                assert_eq!(fair.metrics, biased.metrics);
            }
        }
    }

    #[test]
    fn label_bias_keeps_group_metrics_on_the_diagonal() {
        let ds: Dataset<f64> = make_synthetic(160, 5).unwrap();
        let plan = tiny_plan(vec![BiasKind::Label], vec![0.5], vec![Method::Massaging]);
        let out = run(&ds, &plan).unwrap();
        for chunk in out.records.chunks(2) {
            let f = chunk[0].metrics.unwrap();
            let b = chunk[1].metrics.unwrap();
            // Identical predictions, identical rows and groups: the
            // prediction-only and feature-only measures cannot move.
            assert_eq!(f.spd, b.spd);
            assert_eq!(f.bcc, b.bcc);
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let ds: Dataset<f64> = make_synthetic(160, 7).unwrap();
        let plan = tiny_plan(
            vec![BiasKind::SelectRandom],
            vec![0.0, 0.5],
            vec![Method::Reweighing, Method::Eop],
        );
        let a = run(&ds, &plan).unwrap();
        let b = run(&ds, &plan).unwrap();
        assert_eq!(a, b);
        let mut other = plan.clone();
        other.master_seed = 12;
        let c = run(&ds, &other).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn post_processors_run_end_to_end() {
        let ds: Dataset<f64> = make_synthetic(400, 9).unwrap();
        let plan = tiny_plan(
            vec![BiasKind::SelectRandom],
            vec![0.4],
            vec![Method::Eop, Method::Ceo, Method::RocSpd],
        );
        let out = run(&ds, &plan).unwrap();
        assert_eq!(out.records.len(), 1 * 1 * 4 * 3 * 2);
        let ok = out
            .records
            .iter()
            .filter(|r| r.status == CellStatus::Ok)
            .count();
        assert!(ok >= out.records.len() - 4, "too many failures: {out:?}");
        // Fitted parameters land in the audit trail.
        assert!(out.audit.iter().any(|l| l.contains("margin flip")));
    }

    fn degenerate_dataset() -> Dataset<f64> {
        // Constant features force constant forest scores, which makes
        // every per-group prediction one-sided and the odds mix unfittable.
        let n = 60;
        let mut sensitive = Vec::new();
        let mut label = Vec::new();
        for i in 0..n {
            sensitive.push((i % 2) as u8);
            label.push(if i % 5 == 0 { 0 } else { 1 });
        }
        let score: Vec<f64> = label.iter().map(|&y| y as f64).collect();
        Dataset::new(
            "degenerate",
            (0..n as u64).collect(),
            sensitive.clone(),
            score,
            label,
            vec![1.0; n],
            0.5,
            vec![
                Feature {
                    name: "flat".into(),
                    sensitive: false,
                    data: FeatureData::Numeric(vec![0.0; n]),
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
    fn method_failure_marks_cells_and_run_continues() {
        let ds = degenerate_dataset();
        let plan = tiny_plan(vec![BiasKind::Label], vec![0.0], vec![Method::Eop]);
        let out = run(&ds, &plan).unwrap();
        assert_eq!(out.records.len(), 12);
        for r in &out.records {
            match r.method {
                Method::Unmitigated => {
                    assert_eq!(r.status, CellStatus::Ok);
                    assert!(r.metrics.is_some());
                }
                _ => {
                    assert_eq!(r.status, CellStatus::MethodFailed);
                    assert!(r.metrics.is_none());
                    assert!(r.sensitive_usage.is_none());
                }
            }
        }
        assert!(out.audit.iter().any(|l| l.contains("one-sided")));
    }

    fn fabricated_record(
        level: f64,
        method: Method,
        fold: u32,
        eval_mode: EvalMode,
        status: CellStatus,
        spd: Option<f64>,
    ) -> ResultRecord {
        let metrics = match status {
            CellStatus::Ok => Some(report_from_values([
                Some(0.8),
                None,
                spd,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
            ])),
            CellStatus::MethodFailed => None,
        };
        ResultRecord {
            dataset: "toy".into(),
            kind: BiasKind::Label,
            level,
            method,
            fold,
            eval_mode,
            status,
            metrics,
            sensitive_usage: None,
        }
    }

    #[test]
    fn aggregate_matches_hand_arithmetic_and_cross_rule() {
        let mut records = Vec::new();
        for (fold, spd) in [(0, 0.2), (1, 0.4), (2, 0.9)] {
            records.push(fabricated_record(
                0.1,
                Method::Reweighing,
                fold,
                EvalMode::Fair,
                CellStatus::Ok,
                Some(spd),
            ));
        }
        for fold in 0..3 {
            let status = if fold == 0 { CellStatus::Ok } else { CellStatus::MethodFailed };
            records.push(fabricated_record(
                0.1,
                Method::Eop,
                fold,
                EvalMode::Fair,
                status,
                Some(0.5),
            ));
        }
        let aggs = aggregate(&records);
        assert_eq!(aggs.len(), 2);
        let rw = aggs.iter().find(|a| a.method == Method::Reweighing).unwrap();
        assert_eq!(rw.n_folds, 3);
        assert_eq!(rw.fail_count, 0);
        assert!(!rw.failed);
        assert!((rw.mean.spd.unwrap() - 0.5).abs() < 1e-12);
        let expected_std = ((0.09f64 + 0.01 + 0.16) / 3.0).sqrt();
        assert!((rw.std.spd.unwrap() - expected_std).abs() < 1e-12);
        // Metrics absent everywhere stay absent.
        assert!(rw.mean.bcc.is_none());
        let eop = aggs.iter().find(|a| a.method == Method::Eop).unwrap();
        assert_eq!(eop.fail_count, 2);
        assert!(eop.failed, "2 of 3 folds failed, past the majority");
        // Mean still reported over the single ok fold.
        assert_eq!(eop.mean.spd, Some(0.5));
    }

    #[test]
    fn scatter_pairs_eval_modes_and_flags_clipping() {
        let mut records = Vec::new();
        for eval_mode in EvalMode::ALL {
            let spd = if eval_mode == EvalMode::Fair { 1.2 } else { 0.3 };
            records.push(fabricated_record(
                0.2,
                Method::Ftu,
                0,
                eval_mode,
                CellStatus::Ok,
                Some(spd),
            ));
        }
        // A fair-only group yields no points.
        records.push(fabricated_record(
            0.4,
            Method::Ftu,
            0,
            EvalMode::Fair,
            CellStatus::Ok,
            Some(0.1),
        ));
        let aggs = aggregate(&records);
        let points = diagonal_scatter(&aggs);
        assert_eq!(
            points.iter().filter(|p| p.level == 0.4).count(),
            0,
            "unpaired group must not plot"
        );
        let spd_point = points
            .iter()
            .find(|p| p.metric == "spd" && p.level == 0.2)
            .unwrap();
        assert_eq!(spd_point.fair, 1.2);
        assert_eq!(spd_point.biased, 0.3);
        assert!(spd_point.clipped);
        let acc_point = points
            .iter()
            .find(|p| p.metric == "accuracy" && p.level == 0.2)
            .unwrap();
        assert!(!acc_point.clipped);
    }

    #[test]
    fn plan_validation_rejects_bad_grids() {
        let ds: Dataset<f64> = make_synthetic(80, 1).unwrap();
        let mut plan = tiny_plan(vec![BiasKind::Label], vec![0.5, 0.5], vec![]);
        assert!(run(&ds, &plan).is_err());
        plan.levels = vec![0.5, 0.2];
        assert!(run(&ds, &plan).is_err());
        plan.levels = vec![0.2];
        plan.methods = vec![Method::Unmitigated];
        assert!(run(&ds, &plan).is_err());
        plan.methods = vec![Method::Eop, Method::Eop];
        assert!(run(&ds, &plan).is_err());
        plan.methods = vec![];
        assert!(run(&ds, &plan).is_ok());
        assert_eq!(plan.folds_for(BiasKind::Label), 3);
        plan.n_folds = None;
        assert_eq!(plan.folds_for(BiasKind::Label), 10);
        assert_eq!(plan.folds_for(BiasKind::SelectSelf), 5);
    }
}
