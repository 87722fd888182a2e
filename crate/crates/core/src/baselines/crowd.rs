//! Per-source reconstruction baseline.
//!
//! A single base MLP produces a logit `z`; each noisy source gets a
//! two-parameter head `σ(a_i·z + b_i)` trained to reconstruct that source's
//! labels. All heads share the base, so the base absorbs the consensus
//! while per-source disagreement lands in the heads (a noisier source tends
//! toward a flatter head, i.e. smaller |a_i|). Inference discards the heads
//! and scores with σ(z).

use rand::seq::SliceRandom;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::roc_auc;
use crate::model::{AdmoeModel, ModelConfig, TrainConfig, TrainReport};
use crate::nn::{bce_accumulate, sigmoid, Activation, Adam, BlockMut, BlockRef};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::{cast, to_f64, Scalar};

/// Logit-affine head for one source: `p_i = σ(scale·z + shift)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrowdHead<T> {
    pub scale: T,
    pub shift: T,
}

pub struct CrowdModel<T> {
    /// Plain MLP with an identity output layer (produces logits).
    pub base: AdmoeModel<T>,
    pub heads: Vec<CrowdHead<T>>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CrowdTrainOptions {
    /// Keep heads at their identity initialization (a=1, b=0).
    pub freeze_heads: bool,
}

impl<T: Scalar> CrowdModel<T> {
    pub fn param_count(&self) -> usize {
        self.base.param_count() + 2 * self.heads.len()
    }

    /// Base logits for a batch.
    fn logits(&self, features: &Matrix<T>, weak: &crate::labels::LabelMatrix) -> Result<Vec<T>> {
        self.base.scores(features, weak)
    }

    /// Inference scores: σ(z), heads discarded.
    pub fn scores(&self, features: &Matrix<T>, weak: &crate::labels::LabelMatrix) -> Result<Vec<T>> {
        Ok(self.logits(features, weak)?.into_iter().map(sigmoid).collect())
    }
}

/// Jointly train base and heads; epoch selection mirrors [`crate::model::fit`].
pub fn train_crowd_layer<T: Scalar>(
    dataset: &Dataset<T>,
    split: &Split,
    config: &TrainConfig,
    options: CrowdTrainOptions,
) -> Result<(CrowdModel<T>, TrainReport)> {
    config.validate()?;
    let t = dataset.num_sources();
    if t == 0 {
        return Err(Error::config("crowd layer needs at least one source"));
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

    let mut base = AdmoeModel::new(
        ModelConfig::mlp(dataset.dim(), t),
        derive_seed(config.seed, 0x51),
    )?;
    base.head.activation = Activation::Identity;
    let mut model = CrowdModel {
        base,
        heads: vec![
            CrowdHead {
                scale: T::one(),
                shift: T::zero(),
            };
            t
        ],
    };

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        val_auc: Vec::with_capacity(config.epochs),
        best_epoch: None,
        best_val_auc: f64::NEG_INFINITY,
        best_params: Vec::new(),
        param_count: model.param_count(),
    };
    if config.epochs == 0 {
        report.best_val_auc = f64::NAN;
        return Ok((model, report));
    }

    let val_batch = dataset.gather(&split.val);
    let mut rng = rng_from_seed(config.seed);
    let mut adam = Adam::new(config.lr);
    let mut train_idx = split.train.clone();
    let mut best_heads = model.heads.clone();

    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut rows = 0usize;
        for chunk in train_idx.chunks(config.batch_size) {
            let batch = dataset.gather(chunk);
            let (z, cache) = model.base.forward(&batch.features, &batch.weak)?;
            let n = z.len();

            // per-source heads: L = Σ_i w_i · mean over present rows
            let mut loss = T::zero();
            let mut d_z = vec![T::zero(); n];
            let mut d_scale = vec![T::zero(); t];
            let mut d_shift = vec![T::zero(); t];
            for s in 0..t {
                let head = model.heads[s];
                let p: Vec<T> = z.iter().map(|&zj| sigmoid(head.scale * zj + head.shift)).collect();
                let targets: Vec<u8> = (0..n)
                    .map(|j| if batch.weak.is_present(j, s) { batch.weak.value(j, s) } else { 0 })
                    .collect();
                let mask: Vec<T> = (0..n)
                    .map(|j| if batch.weak.is_present(j, s) { T::one() } else { T::zero() })
                    .collect();
                let mut d_p = vec![T::zero(); n];
                let (l_sum, w_sum) = bce_accumulate(&p, &targets, &mask, &mut d_p);
                if w_sum <= T::zero() {
                    continue;
                }
                let w = cast::<T>(batch.source_weights[s]) / w_sum;
                loss += cast::<T>(batch.source_weights[s]) * l_sum / w_sum;
                for j in 0..n {
                    let u = head.scale * z[j] + head.shift;
                    let sp = sigmoid(u);
                    let g = w * d_p[j] * sp * (T::one() - sp);
                    d_z[j] += g * head.scale;
                    d_scale[s] += g * z[j];
                    d_shift[s] += g;
                }
            }

            // backward through the identity-head base
            let mut grads = crate::model::ModelGrads::zeros_like(&model.base);
            let upstream = Matrix::from_vec(n, 1, d_z);
            let mut d = model
                .base
                .head
                .backward(&cache.head_cache, &upstream, &mut grads.head)?;
            for (layer, (c, g)) in model
                .base
                .trunk
                .iter()
                .zip(cache.trunk.iter().zip(grads.trunk.iter_mut()))
                .rev()
            {
                d = layer.backward(c, &d, g)?;
            }

            if options.freeze_heads {
                let mut params = model.base.param_blocks_mut();
                adam.step(&mut params, &grads.blocks())?;
            } else {
                let mut scale_vec: Vec<T> = model.heads.iter().map(|h| h.scale).collect();
                let mut shift_vec: Vec<T> = model.heads.iter().map(|h| h.shift).collect();
                {
                    let mut params = model.base.param_blocks_mut();
                    params.push(BlockMut::new("crowd.scale", &mut scale_vec));
                    params.push(BlockMut::new("crowd.shift", &mut shift_vec));
                    let mut gblocks = grads.blocks();
                    gblocks.push(BlockRef::new("crowd.scale", &d_scale));
                    gblocks.push(BlockRef::new("crowd.shift", &d_shift));
                    adam.step(&mut params, &gblocks)?;
                }
                for (h, (sc, sh)) in model.heads.iter_mut().zip(scale_vec.iter().zip(&shift_vec)) {
                    h.scale = *sc;
                    h.shift = *sh;
                }
            }

            loss_sum += to_f64(loss) * chunk.len() as f64;
            rows += chunk.len();
        }
        report.train_loss.push(loss_sum / rows as f64);

        let val_scores = model.scores(&val_batch.features, &val_batch.weak)?;
        let auc = roc_auc(&val_scores, &val_labels)?;
        report.val_auc.push(auc);
        if auc > report.best_val_auc {
            report.best_val_auc = auc;
            report.best_epoch = Some(epoch);
            report.best_params = model.base.flat_params();
            best_heads = model.heads.clone();
        }
    }

    model.base.set_flat_params(&report.best_params);
    model.heads = best_heads;
    Ok((model, report))
}

