//! Line-delimited JSON measurement records and CSV summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ManifoldId;

pub const SCHEMA_VERSION: u32 = 1;

/// One measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub schema: u32,
    pub manifold: ManifoldId,
    pub lambda: u64,
    pub seed: u64,
    pub quantity: String,
    /// `None` when the measurement failed; `meta.error` then says why.
    pub value: Option<f64>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl Record {
    pub fn new(manifold: ManifoldId, lambda: u64, seed: u64, quantity: &str, value: f64) -> Self {
        Record {
            schema: SCHEMA_VERSION,
            manifold,
            lambda,
            seed,
            quantity: quantity.to_string(),
            value: Some(value),
            meta: BTreeMap::new(),
        }
    }

    pub fn failed(manifold: ManifoldId, lambda: u64, seed: u64, quantity: &str, err: &Error) -> Self {
        let mut r = Record::new(manifold, lambda, seed, quantity, 0.0);
        r.value = None;
        r.meta.insert("error".into(), err.to_string().into());
        r
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn key(&self) -> RecordKey {
        (self.manifold, self.lambda, self.seed, self.quantity.clone())
    }
}

pub type RecordKey = (ManifoldId, u64, u64, String);

/// A record file kept sorted by key. Loading an existing file makes sweeps
/// resumable: keys already present are skipped, and [`RecordStore::save`]
/// rewrites the whole file in key order, so an interrupted and a clean run
/// produce the same bytes.
#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    records: BTreeMap<RecordKey, Record>,
}

impl RecordStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut records = BTreeMap::new();
        if path.exists() {
            for r in read_records(&path)? {
                records.insert(r.key(), r);
            }
        }
        Ok(RecordStore { path, records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.records.contains_key(key)
    }

    pub fn insert(&mut self, r: Record) {
        self.records.insert(r.key(), r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.records.values()
    }

    pub fn save(&self) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut w = std::io::BufWriter::new(fs::File::create(&tmp)?);
            write_records(&mut w, self.records.values())?;
            w.flush()?;
        }
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}

pub fn write_records<'a>(mut w: impl Write, records: impl IntoIterator<Item = &'a Record>) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Io(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if r.schema != SCHEMA_VERSION {
            return Err(Error::Io(format!("{}:{}: schema {} unsupported", path.display(), i + 1, r.schema)));
        }
        out.push(r);
    }
    Ok(out)
}

/// Per-eigenvalue statistics of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lambda: u64,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let x = p * (sorted.len() - 1) as f64;
    let (i, f) = (x.floor() as usize, x - x.floor());
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn summarize<'a>(records: impl IntoIterator<Item = &'a Record>, quantity: &str) -> Vec<SummaryRow> {
    let mut by: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.quantity == quantity {
            if let Some(v) = r.value {
                by.entry(r.lambda).or_default().push(v);
            }
        }
    }
    by.into_iter()
        .map(|(lambda, mut v)| {
            v.sort_by(f64::total_cmp);
            SummaryRow {
                lambda,
                count: v.len(),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                median: quantile(&v, 0.5),
                q1: quantile(&v, 0.25),
                q3: quantile(&v, 0.75),
                min: v[0],
                max: v[v.len() - 1],
            }
        })
        .collect()
}

pub fn write_summary_csv(w: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_round_trip_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut s = RecordStore::open(&path).unwrap();
        s.insert(Record::new(ManifoldId::Torus2, 25, 1, "length", 3.0).with("resolution", 64));
        s.insert(Record::new(ManifoldId::Torus2, 5, 0, "length", 1.0));
        s.insert(Record::failed(ManifoldId::Torus2, 5, 1, "length", &Error::EmptyNodalSet));
        s.save().unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back.iter().map(|r| r.lambda).collect::<Vec<_>>(), vec![5, 5, 25]);
        assert_eq!(back[1].value, None);
        let s2 = RecordStore::open(&path).unwrap();
        assert!(s2.contains(&(ManifoldId::Torus2, 25, 1, "length".into())));
        s2.save().unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn summaries() {
        let rs: Vec<Record> =
            [1.0, 2.0, 3.0, 10.0].iter().map(|&v| Record::new(ManifoldId::Torus2, 2, v as u64, "x", v)).collect();
        let s = summarize(&rs, "x");
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].median, s[0].mean, s[0].q1, s[0].q3), (2.5, 4.0, 1.75, 4.75));
        let mut out = Vec::new();
        write_summary_csv(&mut out, &s).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("lambda,count,mean,median"));
    }
}
