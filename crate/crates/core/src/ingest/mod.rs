//! Dataset ingestion: raw-CSV loaders, derived variants, a binary cache
//! format, and the one-line-per-dataset summary table.
//!
//! Loaders read the published CSV layouts and produce validated [`Dataset`]
//! values; everything downstream works from those or from a cache file, so
//! the raw files are only needed once.

pub mod cache;
pub mod oulad;
pub mod student;

pub use cache::{read_cache, write_cache};
pub use oulad::{load_oulad, make_complex_variant, OuladFiles};
pub use student::{load_student, make_student_balanced};

use crate::data::Dataset;
use crate::metrics::{report_on, Prediction, DEFAULT_BCC_DELTA, DEFAULT_BCC_K};
use crate::Result;

/// Descriptive statistics for one dataset, as shown in the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub size: usize,
    /// Share of rows in the unprivileged group.
    pub unpriv_prop: f64,
    /// Positive-label rate difference, unprivileged minus privileged.
    pub spd: Option<f64>,
    /// Consistency of labels among nearest neighbors in feature space.
    pub bcc: Option<f64>,
    /// Share of rows with a positive label.
    pub base_rate: f64,
}

/// Computes the summary statistics for a dataset. The label-consistency
/// column treats the ground-truth labels as a predictor of themselves.
pub fn summarize(ds: &Dataset<f64>) -> Result<SummaryRow> {
    let n = ds.n();
    let (_, unpriv) = ds.group_counts();
    let positives = ds.label.iter().filter(|&&l| l == 1).count();
    let pred = Prediction {
        ids: ds.ids.clone(),
        label: ds.label.clone(),
        score: None,
    };
    let report = report_on(&pred, ds, DEFAULT_BCC_K, DEFAULT_BCC_DELTA)?;
    Ok(SummaryRow {
        name: ds.name.clone(),
        size: n,
        unpriv_prop: unpriv as f64 / n as f64,
        spd: ds.label_spd(),
        bcc: report.bcc,
        base_rate: positives as f64 / n as f64,
    })
}

fn round3(v: f64) -> String {
    format!("{v:.3}")
}

/// Truncates toward zero at three decimals, so a proportion never rounds up
/// across a displayed boundary.
fn trunc3(v: f64) -> String {
    format!("{:.3}", (v * 1000.0).trunc() / 1000.0)
}

fn opt3(v: Option<f64>) -> String {
    v.map(round3).unwrap_or_else(|| "NA".to_string())
}

/// One CSV line: `name,size,unpriv_prop,spd,bcc,base_rate`. The group
/// proportion is truncated to three decimals; the other statistics are
/// rounded. Missing statistics print as `NA`.
pub fn format_summary_row(row: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        row.name,
        row.size,
        trunc3(row.unpriv_prop),
        opt3(row.spd),
        opt3(row.bcc),
        round3(row.base_rate)
    )
}

pub const SUMMARY_HEADER: &str = "dataset,size,unpriv_prop,spd,bcc,base_rate";
