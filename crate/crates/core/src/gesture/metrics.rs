use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::{ClassifierModel, Dataset};

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_pairs(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(classes);
        for (a, p) in pairs {
            m.counts[a][p] += 1;
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Accuracy and macro-averaged precision, recall and F1. Classes that
    /// never occur as truth or prediction are left out of the averages; a
    /// ratio with a zero denominator counts as 0.
    pub fn metrics(&self) -> Result<Metrics> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Dataset("cannot score an empty prediction set".into()));
        }
        let k = self.counts.len();
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (mut p_sum, mut r_sum, mut f_sum, mut present) = (0.0, 0.0, 0.0, 0usize);
        let mut correct = 0;
        for c in 0..k {
            let tp = self.counts[c][c];
            correct += tp;
            let actual: u64 = self.counts[c].iter().sum();
            let predicted: u64 = self.counts.iter().map(|row| row[c]).sum();
            if actual == 0 && predicted == 0 {
                continue;
            }
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            p_sum += p;
            r_sum += r;
            f_sum += f;
            present += 1;
        }
        let n = present as f64;
        Ok(Metrics {
            accuracy: correct as f64 / total as f64,
            precision: p_sum / n,
            recall: r_sum / n,
            f1: f_sum / n,
            samples: total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub samples: u64,
}

impl Metrics {
    /// Two-column report in the order accuracy, F-1, precision, recall.
    pub fn table(&self, title: &str) -> String {
        format!(
            "{title}\n  Accuracy   {:.4}\n  F-1 Score  {:.4}\n  Precision  {:.4}\n  Recall     {:.4}\n  Samples    {}\n",
            self.accuracy, self.f1, self.precision, self.recall, self.samples
        )
    }
}

pub fn confusion(model: &ClassifierModel, data: &Dataset) -> Result<ConfusionMatrix> {
    let mapping = data
        .labels
        .iter()
        .map(|l| {
            model
                .label_index(l)
                .ok_or_else(|| Error::Dataset(format!("label {l} is not known to the model")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = ConfusionMatrix::new(model.labels.len());
    for (x, &y) in data.features.iter().zip(&data.targets) {
        let (pred, _) = model.predict(x)?;
        m.counts[mapping[y]][pred] += 1;
    }
    Ok(m)
}

pub fn evaluate(model: &ClassifierModel, data: &Dataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    confusion(model, data)?.metrics()
}
