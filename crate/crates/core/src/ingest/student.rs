//! Loader for the UCI Student (Portuguese course) CSV and its group-balanced
//! variant.
//!
//! The prediction task: pass the course, meaning final grade `G3 >= 10`. The
//! final grade is the row's score, `sex` is the sensitive attribute with boys
//! as the unprivileged group, and every column except `G3` enters the feature
//! table (`G1` and `G2` stay in).

use crate::data::{Dataset, Feature, FeatureData};
use crate::error::Error;
use crate::seeds;
use crate::Result;
use rand::seq::SliceRandom;
use std::path::Path;

const TARGET: &str = "G3";
const SENSITIVE: &str = "sex";
const PASS_GRADE: f64 = 10.0;

fn read_rows(path: &Path, delimiter: u8) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    if !path.exists() {
        return Err(Error::MissingInput(path.display().to_string()));
    }
    let mut rd = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = rd
        .headers()?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in rd.records() {
        let record = record?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok((headers, rows))
}

fn column_index(headers: &[String], name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::InvalidInput(format!("{} has no {name:?} column", path.display()))
    })
}

/// Builds a categorical column with a sorted category table.
pub(crate) fn infer_column_categorical(
    name: &str,
    cells: &[&str],
    sensitive: bool,
) -> Feature<f64> {
    let mut categories: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
    categories.sort();
    categories.dedup();
    let codes = cells
        .iter()
        .map(|c| categories.binary_search(&c.to_string()).unwrap() as u32)
        .collect();
    Feature {
        name: name.to_string(),
        sensitive,
        data: FeatureData::Categorical { codes, categories },
    }
}

/// Builds a feature column: numeric when every cell parses as a number,
/// otherwise categorical.
pub(crate) fn infer_column(name: &str, cells: &[&str], sensitive: bool) -> Feature<f64> {
    let numeric: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
    match numeric {
        Some(values) => Feature {
            name: name.to_string(),
            sensitive,
            data: FeatureData::Numeric(values),
        },
        None => infer_column_categorical(name, cells, sensitive),
    }
}

/// Loads the Student dataset from the semicolon-separated UCI CSV.
pub fn load_student(path: &Path) -> Result<Dataset<f64>> {
    let (headers, rows) = read_rows(path, b';')?;
    let g3_col = column_index(&headers, TARGET, path)?;
    let sex_col = column_index(&headers, SENSITIVE, path)?;
    let mut score = Vec::with_capacity(rows.len());
    let mut label = Vec::with_capacity(rows.len());
    let mut sensitive = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let data_row = i + 2;
        if row.len() != headers.len() {
            return Err(Error::InvalidInput(format!(
                "{} row {data_row}: {} fields, header has {}",
                path.display(),
                row.len(),
                headers.len()
            )));
        }
        let g3: f64 = row[g3_col].parse().map_err(|_| {
            Error::InvalidInput(format!(
                "{} row {data_row}: grade {:?} is not a number",
                path.display(),
                row[g3_col]
            ))
        })?;
        score.push(g3);
        label.push(u8::from(g3 >= PASS_GRADE));
        sensitive.push(match row[sex_col].as_str() {
            "M" => 1,
            "F" => 0,
            other => {
                return Err(Error::InvalidInput(format!(
                    "{} row {data_row}: sex {other:?} is neither \"F\" nor \"M\"",
                    path.display()
                )))
            }
        });
    }
    let n = rows.len();
    let features = headers
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != g3_col)
        .map(|(c, name)| {
            let cells: Vec<&str> = rows.iter().map(|r| r[c].as_str()).collect();
            infer_column(name, &cells, c == sex_col)
        })
        .collect();
    Dataset::new(
        "student",
        (0..n as u64).collect(),
        sensitive,
        score,
        label,
        vec![1.0; n],
        PASS_GRADE,
        features,
    )
}

/// Removes randomly chosen positive-labeled rows from the larger group until
/// both groups have the same size; the construction only succeeds when that
/// also equalizes the positive counts, which drives the label gap to exactly
/// zero. An already balanced dataset is returned unchanged.
pub fn make_student_balanced(ds: &Dataset<f64>, seed: u64) -> Result<Dataset<f64>> {
    let (n0, n1) = ds.group_counts();
    let (p0, p1) = ds.group_positive_counts();
    if n0 == n1 && p0 == p1 {
        return Ok(ds.clone());
    }
    let big: u8 = if n0 >= n1 { 0 } else { 1 };
    let (size_gap, pos_gap) = if big == 0 {
        (n0 - n1, p0 as i64 - p1 as i64)
    } else {
        (n1 - n0, p1 as i64 - p0 as i64)
    };
    if pos_gap != size_gap as i64 {
        return Err(Error::InvalidInput(format!(
            "cannot balance by dropping positives: size gap {size_gap}, positive gap {pos_gap}"
        )));
    }
    let mut candidates: Vec<u64> = (0..ds.n())
        .filter(|&i| ds.sensitive[i] == big && ds.label[i] == 1)
        .map(|i| ds.ids[i])
        .collect();
    let mut rng = seeds::rng(seeds::mix_str(seed, "balance-trim"));
    candidates.shuffle(&mut rng);
    let drop: std::collections::BTreeSet<u64> = candidates.into_iter().take(size_gap).collect();
    let mask: Vec<bool> = ds.ids.iter().map(|id| !drop.contains(id)).collect();
    let mut out = ds.retain_rows(&mask)?;
    out.name = format!("{}_balanced", ds.name);
    Ok(out)
}
