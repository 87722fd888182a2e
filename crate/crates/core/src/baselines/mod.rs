//! Multi-source comparison methods: one model per source, consensus labels,
//! score ensembling, and a per-source reconstruction head.
//!
//! Every baseline network is the plain MLP configuration (no MoE, no labels
//! as input) sized to the same parameter budget as the full model, so
//! comparisons are at equal capacity.

mod crowd;

pub use crowd::{train_crowd_layer, CrowdHead, CrowdModel, CrowdTrainOptions};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::model::{fit, AdmoeModel, ModelConfig, TrainConfig, TrainReport};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Train a plain MLP against a single noisy source treated as clean.
pub fn train_single_noisy<T: Scalar>(
    dataset: &Dataset<T>,
    split: &Split,
    source_index: usize,
    config: &TrainConfig,
) -> Result<(AdmoeModel<T>, TrainReport)> {
    let view = dataset.with_single_source(source_index)?;
    let model_config = ModelConfig::mlp(view.dim(), 1);
    let mut model = AdmoeModel::new(model_config, derive_seed(config.seed, 0x51))?;
    let report = fit(&mut model, &view, split, config)?;
    Ok((model, report))
}

/// Row-wise consensus: 1 when at least half the sources say 1 (ties on even
/// t resolve to anomaly).
pub fn majority_vote(labels: &LabelMatrix) -> Vec<u8> {
    (0..labels.rows())
        .map(|r| {
            let mut present = 0usize;
            let mut ones = 0usize;
            for s in 0..labels.sources() {
                if labels.is_present(r, s) {
                    present += 1;
                    ones += labels.value(r, s) as usize;
                }
            }
            if present == 0 {
                0
            } else {
                (2 * ones >= present) as u8
            }
        })
        .collect()
}

/// Train a plain MLP against the majority-vote consensus column.
pub fn train_label_vote<T: Scalar>(
    dataset: &Dataset<T>,
    split: &Split,
    config: &TrainConfig,
) -> Result<(AdmoeModel<T>, TrainReport)> {
    if dataset.num_sources() == 0 {
        return Err(Error::config("label vote needs at least one source"));
    }
    let vote = majority_vote(&dataset.weak);
    let view = dataset.with_label_column(vote, "vote")?;
    let model_config = ModelConfig::mlp(view.dim(), 1);
    let mut model = AdmoeModel::new(model_config, derive_seed(config.seed, 0x52))?;
    let report = fit(&mut model, &view, split, config)?;
    Ok((model, report))
}

/// `t` independently trained per-source models.
pub struct EnsembleBundle<T> {
    pub members: Vec<AdmoeModel<T>>,
    pub reports: Vec<TrainReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleMode {
    Average,
    Max,
}

/// One SingleNoisy model per source, seeds offset per member.
pub fn train_hyper_ensemble<T: Scalar>(
    dataset: &Dataset<T>,
    split: &Split,
    config: &TrainConfig,
) -> Result<EnsembleBundle<T>> {
    let t = dataset.num_sources();
    if t == 0 {
        return Err(Error::config("hyper ensemble needs at least one source"));
    }
    let mut members = Vec::with_capacity(t);
    let mut reports = Vec::with_capacity(t);
    for s in 0..t {
        let member_config = TrainConfig {
            seed: config.seed.wrapping_add(s as u64),
            ..config.clone()
        };
        let (model, report) = train_single_noisy(dataset, split, s, &member_config)?;
        members.push(model);
        reports.push(report);
    }
    Ok(EnsembleBundle { members, reports })
}

/// Element-wise mean or max of the members' scores.
pub fn hyper_ensemble_scores<T: Scalar>(
    bundle: &EnsembleBundle<T>,
    features: &Matrix<T>,
    mode: EnsembleMode,
) -> Result<Vec<T>> {
    if bundle.members.is_empty() {
        return Err(Error::EmptyBatch {
            context: "hyper_ensemble_scores",
        });
    }
    let n = features.rows();
    // members are plain MLPs: labels are unused
    let empty = LabelMatrix::empty(n);
    let mut combined = vec![T::zero(); n];
    for (i, member) in bundle.members.iter().enumerate() {
        let scores = member.scores(features, &empty)?;
        for (c, s) in combined.iter_mut().zip(scores) {
            *c = match mode {
                EnsembleMode::Average => *c + s,
                EnsembleMode::Max => {
                    if i == 0 {
                        s
                    } else {
                        c.max(s)
                    }
                }
            };
        }
    }
    if mode == EnsembleMode::Average {
        let t = T::from_usize(bundle.members.len()).unwrap();
        combined.iter_mut().for_each(|c| *c = *c / t);
    }
    Ok(combined)
}
