//! Labelled feature sets (CSV) and raw keypoint recordings (JSON lines).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::KeypointFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub features: Vec<Vec<f64>>,
    /// Index into `labels` per row.
    pub targets: Vec<usize>,
}

impl Dataset {
    pub fn new(labels: Vec<String>) -> Self {
        Self {
            labels,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn width(&self) -> Option<usize> {
        self.features.first().map(Vec::len)
    }

    pub fn push(&mut self, features: Vec<f64>, target: usize) {
        self.features.push(features);
        self.targets.push(target);
    }

    pub fn class_count(&self) -> usize {
        let mut seen = vec![false; self.labels.len()];
        for t in &self.targets {
            seen[*t] = true;
        }
        seen.iter().filter(|s| **s).count()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            labels: self.labels.clone(),
            features: rows.iter().map(|r| self.features[*r].clone()).collect(),
            targets: rows.iter().map(|r| self.targets[*r]).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.targets.len() {
            return Err(Error::Dataset("feature and target counts differ".into()));
        }
        let w = self.width().unwrap_or(0);
        for (i, (f, t)) in self.features.iter().zip(&self.targets).enumerate() {
            if f.len() != w {
                return Err(Error::Dataset(format!("row {} has {} features, expected {w}", i + 1, f.len())));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("row {} has a non-finite feature", i + 1)));
            }
            if *t >= self.labels.len() {
                return Err(Error::Dataset(format!("row {} has an unknown label index", i + 1)));
            }
        }
        Ok(())
    }

    /// Header `label,f0,f1,...`, one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let width = self.width().unwrap_or(0);
        let mut header = vec!["label".to_string()];
        header.extend((0..width).map(|i| format!("f{i}")));
        out.write_record(&header).map_err(csv_err)?;
        for (f, t) in self.features.iter().zip(&self.targets) {
            let mut row = vec![self.labels[*t].clone()];
            row.extend(f.iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Labels are numbered in order of first appearance.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Dataset> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("label") || header.len() < 2 {
            return Err(Error::Dataset("first column must be `label` followed by feature columns".into()));
        }
        let mut ds = Dataset::new(Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = i + 2;
            let label = rec.get(0).unwrap_or("").to_string();
            if label.is_empty() {
                return Err(Error::Dataset(format!("line {line}: empty label")));
            }
            let features = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Dataset(format!("line {line}: `{v}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            let t = match ds.labels.iter().position(|l| *l == label) {
                Some(t) => t,
                None => {
                    ds.labels.push(label);
                    ds.labels.len() - 1
                }
            };
            ds.push(features, t);
        }
        ds.validate()?;
        Ok(ds)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Dataset(e.to_string())
}

pub fn write_keypoints_jsonl<W: Write>(mut w: W, frames: &[KeypointFrame]) -> Result<()> {
    for f in frames {
        let line = serde_json::to_string(f).map_err(|e| Error::Dataset(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_keypoints_jsonl<R: BufRead>(r: R) -> Result<Vec<KeypointFrame>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: KeypointFrame =
            serde_json::from_str(&line).map_err(|e| Error::Dataset(format!("line {}: {e}", i + 1)))?;
        f.validate().map_err(|e| Error::Dataset(format!("line {}: {e}", i + 1)))?;
        out.push(f);
    }
    Ok(out)
}
