//! Noisy-label synthesis from ground truth.
//!
//! Two mechanisms:
//!
//! - **label flipping**: each entry independently inverted at a per-source
//!   rate;
//! - **inaccurate output**: classifiers of deliberately limited strength are
//!   trained on small stratified fractions of the ground truth, and their
//!   thresholded predictions over all rows become the noisy columns. Larger
//!   fractions give more accurate labels, so the fraction doubles as a
//!   quality knob.
//!
//! Everything is a pure function of (spec, data, seed); sources use derived
//! seeds so they can be generated independently.

mod generators;

pub use generators::{GeneratorKind, WeakGenerator};

use serde::{Deserialize, Serialize};

use rand::Rng as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::metrics::roc_auc;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::scalar::Scalar;

/// Recipe for a full multi-source synthesis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum NoiseMechanism {
    /// One flip rate per source.
    LabelFlipping { rates: Vec<f64> },
    /// One generator kind per source, all trained at `gt_fraction`.
    InaccurateOutput {
        gt_fraction: f64,
        kinds: Vec<GeneratorKind>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub mechanism: NoiseMechanism,
    pub seed: u64,
}

impl NoiseSpec {
    /// The default four-kind generator lineup.
    pub fn inaccurate(gt_fraction: f64, seed: u64) -> Self {
        NoiseSpec {
            mechanism: NoiseMechanism::InaccurateOutput {
                gt_fraction,
                kinds: GeneratorKind::default_lineup(),
            },
            seed,
        }
    }

    pub fn num_sources(&self) -> usize {
        match &self.mechanism {
            NoiseMechanism::LabelFlipping { rates } => rates.len(),
            NoiseMechanism::InaccurateOutput { kinds, .. } => kinds.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sources() == 0 {
            return Err(Error::config("noise spec needs at least one source"));
        }
        match &self.mechanism {
            NoiseMechanism::LabelFlipping { rates } => {
                if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                    return Err(Error::config("flip rates must lie in [0, 1]"));
                }
            }
            NoiseMechanism::InaccurateOutput { gt_fraction, .. } => {
                if !(*gt_fraction > 0.0 && *gt_fraction <= 1.0) {
                    return Err(Error::config("gt_fraction must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Invert each entry independently with probability `rate`.
pub fn flip_labels(ground_truth: &[u8], rate: f64, rng: &mut Rng) -> Vec<u8> {
    ground_truth
        .iter()
        .map(|&y| if rng.random::<f64>() < rate { 1 - y } else { y })
        .collect()
}

/// Thresholded predictions of each fitted generator over all rows.
pub fn generate_inaccurate_labels<T: Scalar>(
    generators: &[WeakGenerator<T>],
    features: &Matrix<T>,
) -> Result<LabelMatrix> {
    let mut columns = Vec::with_capacity(generators.len());
    for g in generators {
        columns.push(g.predict_labels(features)?);
    }
    Ok(LabelMatrix::from_columns(&columns))
}

/// ROC-AUC of one noisy column treated as scores against ground truth.
pub fn label_quality(noisy_column: &[u8], ground_truth: &[u8]) -> Result<f64> {
    let scores: Vec<f64> = noisy_column.iter().map(|&v| v as f64).collect();
    roc_auc(&scores, ground_truth)
}

/// Synthesized labels plus their measured per-source quality.
#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub labels: LabelMatrix,
    pub quality: Vec<f64>,
}

/// Run a full synthesis: build `t` noisy columns from the dataset's ground
/// truth and measure each column's quality.
pub fn synthesize<T: Scalar>(dataset: &Dataset<T>, spec: &NoiseSpec) -> Result<SynthesisReport> {
    spec.validate()?;
    let gt = dataset
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::config("noise synthesis needs ground truth"))?;

    let labels = match &spec.mechanism {
        NoiseMechanism::LabelFlipping { rates } => {
            let columns: Vec<Vec<u8>> = rates
                .iter()
                .enumerate()
                .map(|(i, &rate)| {
                    let mut rng = rng_from_seed(derive_seed(spec.seed, i as u64));
                    flip_labels(gt, rate, &mut rng)
                })
                .collect();
            LabelMatrix::from_columns(&columns)
        }
        NoiseMechanism::InaccurateOutput { gt_fraction, kinds } => {
            let mut generators = Vec::with_capacity(kinds.len());
            for (i, kind) in kinds.iter().enumerate() {
                let mut rng = rng_from_seed(derive_seed(spec.seed, i as u64));
                generators.push(WeakGenerator::fit(
                    *kind,
                    &dataset.features,
                    gt,
                    *gt_fraction,
                    &mut rng,
                )?);
            }
            generate_inaccurate_labels(&generators, &dataset.features)?
        }
    };

    let quality = (0..labels.sources())
        .map(|s| label_quality(&labels.column(s), gt))
        .collect::<Result<Vec<f64>>>()?;

    Ok(SynthesisReport { labels, quality })
}

/// Synthesize and install the labels into the dataset.
pub fn apply_noise<T: Scalar>(dataset: &mut Dataset<T>, spec: &NoiseSpec) -> Result<Vec<f64>> {
    let report = synthesize(dataset, spec)?;
    dataset.set_weak(report.labels)?;
    Ok(report.quality)
}
