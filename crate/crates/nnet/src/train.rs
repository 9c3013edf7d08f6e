//! Seeded mini-batch training with Adam and a held-out validation tail.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::error::{NnetError, Result};
use crate::params::Parameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub validation_split: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            batch_size: 32,
            epochs: 10,
            validation_split: 0.0,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(NnetError::InvalidConfig(
                "batch_size must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(NnetError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_split) {
            return Err(NnetError::InvalidConfig(format!(
                "validation_split must be in [0, 1), got {}",
                self.validation_split
            )));
        }
        let positive = [self.learning_rate, self.epsilon];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(NnetError::InvalidConfig(
                "learning_rate and epsilon must be positive".into(),
            ));
        }
        if ![self.beta1, self.beta2]
            .iter()
            .all(|b| (0.0..1.0).contains(b))
        {
            return Err(NnetError::InvalidConfig(
                "beta1 and beta2 must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Per-example outcome used for epoch metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub correct: bool,
}

pub trait Trainable: Parameters + Clone {
    type Example;

    /// Mean loss over the batch and its gradient, in the shape of `Self`.
    fn batch_gradient(&self, batch: &[&Self::Example]) -> Result<(f64, Self)>;

    fn evaluate(&self, example: &Self::Example) -> Result<Evaluation>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_size: usize,
    pub validation_size: usize,
    pub skipped_steps: usize,
    pub epochs: Vec<EpochMetrics>,
}

/// Splits `0..n` with one seeded shuffle; the validation partition is the
/// last `ceil(split · n)` indices.
pub fn split_indices(n: usize, split: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_val = ((split * n as f64).ceil() as usize).min(n);
    let val = idx.split_off(n - n_val);
    (idx, val)
}

pub fn train<M: Trainable>(
    model: &mut M,
    data: &[M::Example],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    train_with(model, data, cfg, |_| {})
}

/// Same as [`train`], calling `on_epoch` after every epoch.
pub fn train_with<M, F>(
    model: &mut M,
    data: &[M::Example],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainReport>
where
    M: Trainable,
    F: FnMut(&EpochMetrics),
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(NnetError::EmptyPartition("training"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train_idx, val_idx) = split_indices(data.len(), cfg.validation_split, &mut rng);
    if train_idx.is_empty() {
        return Err(NnetError::EmptyPartition("training"));
    }
    if cfg.validation_split > 0.0 && val_idx.is_empty() {
        return Err(NnetError::EmptyPartition("validation"));
    }

    let mut adam = Adam::new(cfg.adam(), model);
    let mut skipped = 0;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.batch_size) {
            let batch: Vec<&M::Example> = chunk.iter().map(|&i| &data[i]).collect();
            let (_, grads) = model.batch_gradient(&batch)?;
            match adam.step(model, &grads) {
                Ok(()) => {}
                Err(e @ NnetError::NonFiniteGradient { .. }) => {
                    warn!("epoch {epoch}: {e}");
                    skipped += 1;
                }
                Err(e) => return Err(e),
            }
        }
        let (train_loss, train_accuracy) = evaluate_all(model, data, &train_idx)?;
        let (validation_loss, validation_accuracy) = if val_idx.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate_all(model, data, &val_idx)?;
            (Some(l), Some(a))
        };
        let metrics = EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            validation_loss,
            validation_accuracy,
        };
        on_epoch(&metrics);
        epochs.push(metrics);
    }
    Ok(TrainReport {
        train_size: train_idx.len(),
        validation_size: val_idx.len(),
        skipped_steps: skipped,
        epochs,
    })
}

fn evaluate_all<M: Trainable>(model: &M, data: &[M::Example], idx: &[usize]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let e = model.evaluate(&data[i])?;
        loss += e.loss;
        correct += usize::from(e.correct);
    }
    let n = idx.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_takes_ceiling_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (train, val) = split_indices(11, 0.2, &mut rng);
        assert_eq!(val.len(), 3);
        assert_eq!(train.len(), 8);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                batch_size: 0,
                ..ok.clone()
            },
            TrainConfig {
                epochs: 0,
                ..ok.clone()
            },
            TrainConfig {
                validation_split: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                validation_split: -0.1,
                ..ok.clone()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
