//! Flat-file interchange for run outputs.
//!
//! Four artifacts leave a run: the per-fold records CSV, the aggregates CSV,
//! a JSON metadata file freezing every knob and seed, and a plain-text audit
//! log. CSV columns are fixed and headed; absent values are empty cells;
//! floats use the shortest decimal form that parses back to the same value,
//! so `parse(emit(x)) == x` holds for both CSV kinds.

use crate::bias::BiasKind;
use crate::error::Error;
use crate::learn::ForestParams;
use crate::metrics::METRIC_NAMES;
use crate::mitigate::{CostConstraint, Method};
use crate::pipeline::{
    report_from_values, AggregateRecord, CellStatus, EvalMode, ExperimentPlan, ResultRecord,
};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const RECORD_FIXED: [&str; 7] = [
    "dataset",
    "kind",
    "level",
    "method",
    "fold",
    "eval_mode",
    "status",
];

const AGGREGATE_FIXED: [&str; 8] = [
    "dataset",
    "kind",
    "level",
    "method",
    "eval_mode",
    "n_folds",
    "fail_count",
    "failed",
];

/// Marker the aggregates file carries in the `failed` column when a group
/// lost the majority of its folds.
pub const FAILED_MARKER: &str = "FAILED";

/// Column names of the records CSV, in emission order.
pub fn record_header() -> Vec<String> {
    let mut h: Vec<String> = RECORD_FIXED.iter().map(|s| s.to_string()).collect();
    h.extend(METRIC_NAMES.iter().map(|m| m.to_string()));
    h.push("sensitive_usage".into());
    h
}

/// Column names of the aggregates CSV, in emission order.
pub fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = AGGREGATE_FIXED.iter().map(|s| s.to_string()).collect();
    for m in METRIC_NAMES {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h.push("sensitive_usage_mean".into());
    h.push("sensitive_usage_std".into());
    h
}

fn float_cell(v: f64) -> String {
    v.to_string()
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(float_cell).unwrap_or_default()
}

fn parse_f64(cell: &str, what: &str) -> Result<f64> {
    cell.parse()
        .map_err(|_| Error::InvalidInput(format!("bad {what} value {cell:?}")))
}

fn parse_opt(cell: &str, what: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_f64(cell, what).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(cell: &str, what: &str) -> Result<T> {
    cell.parse()
        .map_err(|_| Error::InvalidInput(format!("bad {what} value {cell:?}")))
}

fn check_header(record: &csv::StringRecord, expected: &[String], what: &str) -> Result<()> {
    let got: Vec<&str> = record.iter().collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::InvalidInput(format!(
            "{what} header mismatch: expected {expected:?}, got {got:?}"
        )));
    }
    Ok(())
}

/// Emits the records CSV in the order given. Run output already arrives in
/// canonical order, and emission must not reorder or the round-trip breaks.
pub fn records_to_csv(records: &[ResultRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(record_header())?;
    for r in records {
        let metrics = r.metrics.map(|m| m.values()).unwrap_or([None; 10]);
        let mut row = vec![
            r.dataset.clone(),
            r.kind.as_str().to_string(),
            float_cell(r.level),
            r.method.as_str().to_string(),
            r.fold.to_string(),
            r.eval_mode.as_str().to_string(),
            r.status.as_str().to_string(),
        ];
        row.extend(metrics.iter().map(|&v| opt_cell(v)));
        row.push(opt_cell(r.sensitive_usage));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv not utf-8: {e}")))
}

/// Parses a records CSV produced by [`records_to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    check_header(rd.headers()?, &record_header(), "records")?;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        if row.len() != RECORD_FIXED.len() + 11 {
            return Err(Error::InvalidInput(format!(
                "records row has {} columns, expected {}",
                row.len(),
                RECORD_FIXED.len() + 11
            )));
        }
        let status: CellStatus = row[6].parse()?;
        let mut values = [None; 10];
        for (i, v) in values.iter_mut().enumerate() {
            *v = parse_opt(&row[7 + i], METRIC_NAMES[i])?;
        }
        let metrics = match status {
            CellStatus::Ok => Some(report_from_values(values)),
            CellStatus::MethodFailed => {
                if values.iter().any(Option::is_some) {
                    return Err(Error::InvalidInput(
                        "failed row must not carry metric values".into(),
                    ));
                }
                None
            }
        };
        out.push(ResultRecord {
            dataset: row[0].to_string(),
            kind: row[1].parse()?,
            level: parse_f64(&row[2], "level")?,
            method: row[3].parse()?,
            fold: parse_int(&row[4], "fold")?,
            eval_mode: row[5].parse()?,
            status,
            metrics,
            sensitive_usage: parse_opt(&row[17], "sensitive_usage")?,
        });
    }
    Ok(out)
}

/// Emits the aggregates CSV in the order given.
pub fn aggregates_to_csv(aggregates: &[AggregateRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(aggregate_header())?;
    for a in aggregates {
        let mut row = vec![
            a.dataset.clone(),
            a.kind.as_str().to_string(),
            float_cell(a.level),
            a.method.as_str().to_string(),
            a.eval_mode.as_str().to_string(),
            a.n_folds.to_string(),
            a.fail_count.to_string(),
            if a.failed { FAILED_MARKER.into() } else { String::new() },
        ];
        for (m, s) in a.mean.values().iter().zip(a.std.values().iter()) {
            row.push(opt_cell(*m));
            row.push(opt_cell(*s));
        }
        row.push(opt_cell(a.usage_mean));
        row.push(opt_cell(a.usage_std));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv not utf-8: {e}")))
}

/// Parses an aggregates CSV produced by [`aggregates_to_csv`].
pub fn aggregates_from_csv(text: &str) -> Result<Vec<AggregateRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    check_header(rd.headers()?, &aggregate_header(), "aggregates")?;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        if row.len() != AGGREGATE_FIXED.len() + 22 {
            return Err(Error::InvalidInput(format!(
                "aggregates row has {} columns, expected {}",
                row.len(),
                AGGREGATE_FIXED.len() + 22
            )));
        }
        let failed = match &row[7] {
            "" => false,
            FAILED_MARKER => true,
            other => {
                return Err(Error::InvalidInput(format!(
                    "bad failed marker {other:?}"
                )))
            }
        };
        let mut means = [None; 10];
        let mut stds = [None; 10];
        for i in 0..10 {
            means[i] = parse_opt(&row[8 + 2 * i], METRIC_NAMES[i])?;
            stds[i] = parse_opt(&row[9 + 2 * i], METRIC_NAMES[i])?;
        }
        out.push(AggregateRecord {
            dataset: row[0].to_string(),
            kind: row[1].parse()?,
            level: parse_f64(&row[2], "level")?,
            method: row[3].parse()?,
            eval_mode: row[4].parse()?,
            n_folds: parse_int(&row[5], "n_folds")?,
            fail_count: parse_int(&row[6], "fail_count")?,
            failed,
            mean: report_from_values(means),
            std: report_from_values(stds),
            usage_mean: parse_opt(&row[28], "sensitive_usage_mean")?,
            usage_std: parse_opt(&row[29], "sensitive_usage_std")?,
        });
    }
    Ok(out)
}

/// Forest knobs as frozen into metadata. The per-cell tree seed is derived
/// from the master seed, so no standalone forest seed appears here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestMeta {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: f64,
    pub min_samples_leaf: f64,
    pub mtry: Option<usize>,
}

impl From<&ForestParams> for ForestMeta {
    fn from(p: &ForestParams) -> Self {
        ForestMeta {
            n_trees: p.n_trees,
            max_depth: p.tree.max_depth,
            min_samples_split: p.tree.min_samples_split,
            min_samples_leaf: p.tree.min_samples_leaf,
            mtry: p.mtry,
        }
    }
}

/// Every design knob and seed of one run, for the metadata file. Reading this
/// file plus the dataset cache is enough to replay the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub dataset: String,
    pub master_seed: u64,
    pub kinds: Vec<BiasKind>,
    pub levels: Vec<f64>,
    /// Fold count per bias kind, after per-kind defaults are resolved.
    pub folds: BTreeMap<String, usize>,
    /// Methods in run order; the unmitigated baseline always leads.
    pub methods: Vec<Method>,
    pub eval_modes: Vec<EvalMode>,
    pub forest: ForestMeta,
    pub noise: f64,
    pub ceo_cost: CostConstraint,
    pub roc_bounds: (f64, f64),
    pub roc_thresholds: usize,
    pub roc_margins: usize,
}

impl RunMeta {
    pub fn new(dataset: &str, plan: &ExperimentPlan) -> Self {
        let mut methods = vec![Method::Unmitigated];
        methods.extend(plan.methods.iter().copied());
        RunMeta {
            dataset: dataset.to_string(),
            master_seed: plan.master_seed,
            kinds: plan.kinds.clone(),
            levels: plan.levels.clone(),
            folds: plan
                .kinds
                .iter()
                .map(|&k| (k.as_str().to_string(), plan.folds_for(k)))
                .collect(),
            methods,
            eval_modes: EvalMode::ALL.to_vec(),
            forest: ForestMeta::from(&plan.forest),
            noise: plan.noise,
            ceo_cost: plan.ceo_cost,
            roc_bounds: plan.roc_bounds,
            roc_thresholds: plan.roc_thresholds,
            roc_margins: plan.roc_margins,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad metadata: {e}")))
    }
}

/// Joins audit lines into the log file body.
pub fn audit_to_text(audit: &[String]) -> String {
    let mut out = String::new();
    for line in audit {
        out.push_str(line);
        out.push('\n');
    }
    out
}
