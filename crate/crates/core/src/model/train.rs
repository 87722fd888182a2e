//! Minibatch training with Adam and validation-based epoch selection.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::nn::Adam;
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::Scalar;

use super::{AdmoeModel, LossTarget};

/// How each batch turns `t` noisy-label sets into a loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// One source drawn uniformly per batch, used as the pseudo-clean target.
    SampleOne,
    /// Weight-normalized average over all sources.
    CombineAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Load-balancing factor α in `loss = α·L_g + L_o`.
    pub alpha: f64,
    pub loss_mode: LossMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 256,
            epochs: 25,
            alpha: 0.01,
            loss_mode: LossMode::CombineAll,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.alpha < 0.0 {
            return Err(Error::config("alpha must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch curves plus the restored best snapshot.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_auc: Vec<f64>,
    /// Argmax of validation ROC-AUC, lowest index on ties; `None` when no
    /// epochs ran.
    pub best_epoch: Option<usize>,
    pub best_val_auc: f64,
    /// Flat parameters at the best epoch (also restored into the model).
    pub best_params: Vec<f64>,
    pub param_count: usize,
}

pub(crate) fn sample_source(rng: &mut Rng, t: usize) -> usize {
    rng.random_range(0..t)
}

/// Train with minibatch Adam; after the last epoch the model is restored to
/// the epoch with the highest validation ROC-AUC.
///
/// Validation scoring needs ground-truth labels with both classes present on
/// the validation rows.
pub fn fit<T: Scalar>(
    model: &mut AdmoeModel<T>,
    dataset: &Dataset<T>,
    split: &Split,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if dataset.num_sources() == 0 {
        return Err(Error::config("fit needs at least one noisy-label source"));
    }
    let gt = dataset.ground_truth.as_ref().ok_or_else(|| {
        Error::config("fit needs ground-truth labels on validation rows for epoch selection")
    })?;

    let val_labels: Vec<u8> = split.val.iter().map(|&i| gt[i]).collect();
    let pos = val_labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == val_labels.len() {
        return Err(Error::config(
            "validation split is single-class, so ROC-AUC is undefined; \
             re-split with another seed or use the stratified split",
        ));
    }

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_auc: Vec::with_capacity(cfg.epochs),
        best_epoch: None,
        best_val_auc: f64::NEG_INFINITY,
        best_params: Vec::new(),
        param_count: model.param_count(),
    };
    if cfg.epochs == 0 {
        report.best_val_auc = f64::NAN;
        return Ok(report);
    }

    let val_batch = dataset.gather(&split.val);
    let t = dataset.num_sources();
    let mut rng = rng_from_seed(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    let mut train_idx = split.train.clone();

    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut row_count = 0usize;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let batch = dataset.gather(chunk);
            let target = match cfg.loss_mode {
                LossMode::CombineAll => LossTarget::Combine,
                LossMode::SampleOne => LossTarget::Single(sample_source(&mut rng, t)),
            };
            let (loss, grads) = model.batch_loss(&batch, target, cfg.alpha)?;
            let mut params = model.param_blocks_mut();
            adam.step(&mut params, &grads.blocks())?;
            loss_sum += loss * chunk.len() as f64;
            row_count += chunk.len();
        }
        report.train_loss.push(loss_sum / row_count as f64);

        let val_scores = model.scores(&val_batch.features, &val_batch.weak)?;
        let auc = roc_auc(&val_scores, &val_labels)?;
        report.val_auc.push(auc);
        if auc > report.best_val_auc {
            report.best_val_auc = auc;
            report.best_epoch = Some(epoch);
            report.best_params = model.flat_params();
        }
    }

    model.set_flat_params(&report.best_params);
    Ok(report)
}

/// Evaluate a trained model on a row subset against ground truth.
pub fn test_scores<T: Scalar>(
    model: &AdmoeModel<T>,
    dataset: &Dataset<T>,
    rows: &[usize],
) -> Result<(Vec<T>, Vec<u8>)> {
    let gt = dataset
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::config("evaluation needs ground-truth labels"))?;
    let batch = dataset.gather(rows);
    let scores = model.scores(&batch.features, &batch.weak)?;
    let labels: Vec<u8> = rows.iter().map(|&i| gt[i]).collect();
    Ok((scores, labels))
}

/// ROC-AUC of a trained model on the given rows.
pub fn test_auc<T: Scalar>(model: &AdmoeModel<T>, dataset: &Dataset<T>, rows: &[usize]) -> Result<f64> {
    let (scores, labels) = test_scores(model, dataset, rows)?;
    roc_auc(&scores, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_one_draw_frequency_is_uniform() {
        let mut rng = rng_from_seed(123);
        let t = 4;
        let n = 10_000;
        let mut counts = vec![0usize; t];
        for _ in 0..n {
            counts[sample_source(&mut rng, t)] += 1;
        }
        // binomial CI: p=1/4, sd = sqrt(n·p·(1-p)) ≈ 43.3; allow 4σ
        let expect = n as f64 / t as f64;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for (s, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() < 4.0 * sd,
                "source {s}: {c} draws"
            );
        }
    }

}
