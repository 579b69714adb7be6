//! Mini-batch training with Adam on mean cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::metrics::evaluate;
use crate::gesture::model::TrainingMeta;
use crate::gesture::{ClassifierModel, Dataset, GestureKind, Metrics, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of rows held out for validation.
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 7,
            validation_fraction: 0.2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub train: Metrics,
    pub validation: Option<Metrics>,
    pub train_rows: usize,
    pub validation_rows: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, net: &mut Mlp, grad: &Mlp, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in net.params_mut().zip(grad.params()).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Deterministic shuffled split into (train, validation) row indices.
pub fn split_rows(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT));
    let held = ((n as f64) * fraction).round() as usize;
    let held = held.min(n.saturating_sub(1));
    let val = rows.split_off(n - held);
    (rows, val)
}

const SPLIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn train(data: &Dataset, kind: GestureKind, cfg: &TrainConfig) -> Result<(ClassifierModel, TrainReport)> {
    data.validate()?;
    if data.class_count() < 2 {
        return Err(Error::Dataset("training needs at least two classes".into()));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::InvalidParameter("invalid training configuration".into()));
    }
    let width = data.width().unwrap_or(0);
    let mut sizes = vec![width];
    sizes.extend(&cfg.hidden);
    sizes.push(data.labels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::init(&sizes, &mut rng)?;
    let (mut train_rows, val_rows) = split_rows(data.len(), cfg.validation_fraction, cfg.seed);
    let mut opt = Adam {
        m: vec![0.0; net.param_count()],
        v: vec![0.0; net.param_count()],
        t: 0,
    };
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        train_rows.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in train_rows.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|r| data.features[*r].as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|r| data.targets[*r]).collect();
            let (loss, grad) = net.loss_and_grad(&xs, &ys)?;
            opt.step(&mut net, &grad, cfg);
            sum += loss;
            batches += 1;
        }
        let mean = sum / batches.max(1) as f64;
        log::debug!("epoch {epoch}: loss {mean:.5}");
        epoch_losses.push(mean);
    }
    let meta = TrainingMeta {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
    };
    let model = ClassifierModel::new(kind, data.labels.clone(), net, meta)?;
    let train_set = data.subset(&train_rows);
    let val_set = data.subset(&val_rows);
    let report = TrainReport {
        epoch_losses,
        train: evaluate(&model, &train_set)?,
        validation: if val_set.is_empty() { None } else { Some(evaluate(&model, &val_set)?) },
        train_rows: train_rows.len(),
        validation_rows: val_rows.len(),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ds = Dataset::new(vec!["left".into(), "right".into()]);
        for i in 0..n {
            let c = i % 2;
            let x = if c == 0 { rng.random_range(-1.0..-0.2) } else { rng.random_range(0.2..1.0) };
            ds.push(vec![x, rng.random_range(-1.0..1.0)], c);
        }
        ds
    }

    #[test]
    fn separable_pair_reaches_full_accuracy() {
        let cfg = TrainConfig {
            hidden: vec![8],
            epochs: 200,
            ..TrainConfig::default()
        };
        let (_, report) = train(&separable(200, 1), GestureKind::Static, &cfg).unwrap();
        assert_eq!(report.validation.unwrap().accuracy, 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            hidden: vec![6, 4],
            epochs: 5,
            ..TrainConfig::default()
        };
        let ds = separable(100, 2);
        let (a, _) = train(&ds, GestureKind::Static, &cfg).unwrap();
        let (b, _) = train(&ds, GestureKind::Static, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let mut ds = Dataset::new(vec!["a".into(), "b".into()]);
        ds.push(vec![1.0], 0);
        ds.push(vec![2.0], 0);
        assert!(train(&ds, GestureKind::Static, &TrainConfig::default()).is_err());
    }
}
