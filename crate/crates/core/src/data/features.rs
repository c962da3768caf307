use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    /// `codes[row]` indexes into `levels`.
    Categorical { levels: Vec<String>, codes: Vec<u32> },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub data: ColumnData,
}

/// Per-entity attributes, stored column-wise.
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<FeatureColumn>,
}

impl PartialEq for FeatureTable {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.columns == other.columns
    }
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, columns: Vec<FeatureColumn>) -> Result<Self> {
        let bad = |reason: String| Error::FeatureTable {
            path: "<memory>".into(),
            reason,
        };
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(bad(format!("duplicate id {id:?}")));
            }
        }
        for c in &columns {
            if c.data.len() != ids.len() {
                return Err(bad(format!(
                    "column {:?} has {} values for {} ids",
                    c.name,
                    c.data.len(),
                    ids.len()
                )));
            }
            if let ColumnData::Categorical { levels, codes } = &c.data {
                if let Some(code) = codes.iter().find(|&&c| c as usize >= levels.len()) {
                    return Err(bad(format!(
                        "column {:?} uses undeclared level code {code}",
                        c.name
                    )));
                }
            }
        }
        Ok(FeatureTable {
            ids,
            index,
            columns,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Reads the sidecar CSV format: an `id` column followed by typed headers
    /// `name:num` or `name:cat`, optionally `name:cat[l1|l2|...]` to declare the
    /// vocabulary. Undeclared vocabularies are the sorted distinct levels seen.
    pub fn read_csv<R: Read>(reader: R, origin: &str) -> Result<Self> {
        let bad = |reason: String| Error::FeatureTable {
            path: origin.to_string(),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .clone();
        if headers.get(0) != Some("id") {
            return Err(bad("first column must be `id`".into()));
        }
        enum Spec {
            Num(String),
            Cat(String, Option<Vec<String>>),
        }
        let mut specs = Vec::new();
        for h in headers.iter().skip(1) {
            let (name, ty) = h
                .split_once(':')
                .ok_or_else(|| bad(format!("header {h:?} lacks a `:num` or `:cat` type")))?;
            let spec = if ty == "num" {
                Spec::Num(name.to_string())
            } else if ty == "cat" {
                Spec::Cat(name.to_string(), None)
            } else if let Some(vocab) = ty.strip_prefix("cat[").and_then(|s| s.strip_suffix(']')) {
                let levels: Vec<String> = vocab.split('|').map(str::to_string).collect();
                Spec::Cat(name.to_string(), Some(levels))
            } else {
                return Err(bad(format!("unknown column type in header {h:?}")));
            };
            specs.push(spec);
        }

        let mut ids = Vec::new();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); specs.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(format!("row {}: {e}", row + 2)))?;
            if rec.len() != specs.len() + 1 {
                return Err(bad(format!(
                    "row {}: expected {} fields, got {}",
                    row + 2,
                    specs.len() + 1,
                    rec.len()
                )));
            }
            ids.push(rec[0].to_string());
            for (c, v) in rec.iter().skip(1).enumerate() {
                raw[c].push(v.to_string());
            }
        }

        let mut columns = Vec::with_capacity(specs.len());
        for (spec, values) in specs.into_iter().zip(raw) {
            let column = match spec {
                Spec::Num(name) => {
                    let mut out = Vec::with_capacity(values.len());
                    for (r, v) in values.iter().enumerate() {
                        let x: f64 = v.trim().parse().map_err(|_| {
                            bad(format!("row {}: column {name:?} value {v:?} is not numeric", r + 2))
                        })?;
                        if !x.is_finite() {
                            return Err(bad(format!("row {}: column {name:?} is not finite", r + 2)));
                        }
                        out.push(x);
                    }
                    FeatureColumn {
                        name,
                        data: ColumnData::Numeric(out),
                    }
                }
                Spec::Cat(name, declared) => {
                    let levels = declared.unwrap_or_else(|| {
                        let mut l: Vec<String> = values.clone();
                        l.sort();
                        l.dedup();
                        l
                    });
                    let lookup: HashMap<&str, u32> = levels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (l.as_str(), i as u32))
                        .collect();
                    let mut codes = Vec::with_capacity(values.len());
                    for (r, v) in values.iter().enumerate() {
                        let code = lookup.get(v.as_str()).ok_or_else(|| {
                            bad(format!(
                                "row {}: level {v:?} not in the vocabulary of {name:?}",
                                r + 2
                            ))
                        })?;
                        codes.push(*code);
                    }
                    FeatureColumn {
                        name,
                        data: ColumnData::Categorical { levels, codes },
                    }
                }
            };
            columns.push(column);
        }
        FeatureTable::new(ids, columns).map_err(|e| match e {
            Error::FeatureTable { reason, .. } => bad(reason),
            other => other,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Serde(e.to_string());
        let mut header = vec!["id".to_string()];
        for c in &self.columns {
            header.push(match &c.data {
                ColumnData::Numeric(_) => format!("{}:num", c.name),
                ColumnData::Categorical { levels, .. } => {
                    format!("{}:cat[{}]", c.name, levels.join("|"))
                }
            });
        }
        wtr.write_record(&header).map_err(to_err)?;
        for (r, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            for c in &self.columns {
                rec.push(match &c.data {
                    ColumnData::Numeric(v) => format!("{}", v[r]),
                    ColumnData::Categorical { levels, codes } => levels[codes[r] as usize].clone(),
                });
            }
            wtr.write_record(&rec).map_err(to_err)?;
        }
        wtr.flush().map_err(|e| Error::Serde(e.to_string()))
    }
}
