//! Columnar binary cache for ingested datasets.
//!
//! Layout: the magic bytes `DFC1`, a little-endian u32 header length, a JSON
//! header describing every column (name, kind, role, categories), then the
//! column payloads in header order as little-endian numerics. Writing is
//! deterministic, so rebuilding a cache from the same dataset produces
//! identical bytes.

use crate::data::{Dataset, Feature, FeatureData};
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DFC1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ColumnKind {
    U64,
    U8,
    F64,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ColumnRole {
    Id,
    Sensitive,
    Score,
    Label,
    Weight,
    Feature,
    SensitiveFeature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ColumnDesc {
    name: String,
    kind: ColumnKind,
    role: ColumnRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheHeader {
    name: String,
    n_rows: u64,
    threshold: f64,
    group_removed: bool,
    columns: Vec<ColumnDesc>,
}

fn push_u64s(buf: &mut Vec<u8>, values: &[u64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_u32s(buf: &mut Vec<u8>, values: &[u32]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a dataset into cache bytes.
pub fn to_bytes(ds: &Dataset<f64>) -> Vec<u8> {
    let mut columns = vec![
        ColumnDesc {
            name: "id".into(),
            kind: ColumnKind::U64,
            role: ColumnRole::Id,
            categories: None,
        },
        ColumnDesc {
            name: "sensitive".into(),
            kind: ColumnKind::U8,
            role: ColumnRole::Sensitive,
            categories: None,
        },
        ColumnDesc {
            name: "score".into(),
            kind: ColumnKind::F64,
            role: ColumnRole::Score,
            categories: None,
        },
        ColumnDesc {
            name: "label".into(),
            kind: ColumnKind::U8,
            role: ColumnRole::Label,
            categories: None,
        },
        ColumnDesc {
            name: "weight".into(),
            kind: ColumnKind::F64,
            role: ColumnRole::Weight,
            categories: None,
        },
    ];
    for f in &ds.features {
        let role = if f.sensitive {
            ColumnRole::SensitiveFeature
        } else {
            ColumnRole::Feature
        };
        columns.push(match &f.data {
            FeatureData::Numeric(_) => ColumnDesc {
                name: f.name.clone(),
                kind: ColumnKind::F64,
                role,
                categories: None,
            },
            FeatureData::Categorical { categories, .. } => ColumnDesc {
                name: f.name.clone(),
                kind: ColumnKind::Categorical,
                role,
                categories: Some(categories.clone()),
            },
        });
    }
    let header = CacheHeader {
        name: ds.name.clone(),
        n_rows: ds.n() as u64,
        threshold: ds.threshold,
        group_removed: ds.group_removed,
        columns,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    push_u64s(&mut buf, &ds.ids);
    buf.extend_from_slice(&ds.sensitive);
    push_f64s(&mut buf, &ds.score);
    buf.extend_from_slice(&ds.label);
    push_f64s(&mut buf, &ds.weight);
    for f in &ds.features {
        match &f.data {
            FeatureData::Numeric(v) => push_f64s(&mut buf, v),
            FeatureData::Categorical { codes, .. } => push_u32s(&mut buf, codes),
        }
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::InvalidInput("cache truncated".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u64s(&mut self, n: usize) -> Result<Vec<u64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.take(4 * n)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u8s(&mut self, n: usize) -> Result<Vec<u8>> {
        Ok(self.take(n)?.to_vec())
    }
}

/// Rebuilds a dataset from cache bytes.
pub fn from_bytes(bytes: &[u8]) -> Result<Dataset<f64>> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::InvalidInput(
            "not a dataset cache (bad magic)".into(),
        ));
    }
    let header_len = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    let header: CacheHeader = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| Error::InvalidInput(format!("bad cache header: {e}")))?;
    let n = header.n_rows as usize;
    let mut ids = None;
    let mut sensitive = None;
    let mut score = None;
    let mut label = None;
    let mut weight = None;
    let mut features = Vec::new();
    for col in &header.columns {
        match col.role {
            ColumnRole::Id => ids = Some(cur.u64s(n)?),
            ColumnRole::Sensitive => sensitive = Some(cur.u8s(n)?),
            ColumnRole::Score => score = Some(cur.f64s(n)?),
            ColumnRole::Label => label = Some(cur.u8s(n)?),
            ColumnRole::Weight => weight = Some(cur.f64s(n)?),
            ColumnRole::Feature | ColumnRole::SensitiveFeature => {
                let data = match col.kind {
                    ColumnKind::F64 => FeatureData::Numeric(cur.f64s(n)?),
                    ColumnKind::Categorical => FeatureData::Categorical {
                        codes: cur.u32s(n)?,
                        categories: col.categories.clone().ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "categorical column {} lacks categories",
                                col.name
                            ))
                        })?,
                    },
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "unsupported feature kind in column {}",
                            col.name
                        )))
                    }
                };
                features.push(Feature {
                    name: col.name.clone(),
                    sensitive: matches!(col.role, ColumnRole::SensitiveFeature),
                    data,
                });
            }
        }
    }
    if cur.at != bytes.len() {
        return Err(Error::InvalidInput("cache has trailing bytes".into()));
    }
    let missing = |what: &str| Error::InvalidInput(format!("cache missing {what} column"));
    let ds = Dataset::from_parts(
        header.name,
        ids.ok_or_else(|| missing("id"))?,
        sensitive.ok_or_else(|| missing("sensitive"))?,
        score.ok_or_else(|| missing("score"))?,
        label.ok_or_else(|| missing("label"))?,
        weight.ok_or_else(|| missing("weight"))?,
        header.threshold,
        features,
        header.group_removed,
    )?;
    Ok(ds)
}

/// Writes a dataset cache file.
pub fn write_cache(ds: &Dataset<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(ds))?;
    Ok(())
}

/// Reads a dataset cache file; a missing path is reported as missing input.
pub fn read_cache(path: &Path) -> Result<Dataset<f64>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.display().to_string()));
    }
    from_bytes(&std::fs::read(path)?)
}
