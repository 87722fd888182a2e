//! Weakly supervised anomaly detection from multiple noisy label sources.
//!
//! The centerpiece is a small feed-forward detector whose penultimate layer
//! is a mixture-of-experts: a gating network conditioned on both the raw
//! features and a learned embedding of the sample's noisy labels activates
//! the top-k of m expert sub-networks, so the model shares most parameters
//! across label sources while letting experts specialize. Training mixes a
//! multi-source cross-entropy with a load-balancing term that keeps experts
//! evenly used.
//!
//! Around the model sit the pieces needed to evaluate it end to end:
//!
//! - [`noise`] — synthesizing noisy label sets from ground truth (label
//!   flipping, or the thresholded predictions of deliberately weak
//!   classifiers trained on small label fractions);
//! - [`baselines`] — per-source models, majority vote, score ensembles, and
//!   a per-source reconstruction head, all at matched parameter budgets;
//! - [`metrics`] — ROC-AUC and average precision with brute-force oracles;
//! - [`data`] — CSV datasets, 70/25/5 splits, standardization, and a
//!   synthetic benchmark generator;
//! - [`model`] — assembly, training with validation-based epoch selection,
//!   binary snapshots, clean-label integration, per-expert case studies.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below pin the 64-bit instantiation used by the harness, whose
//! tolerances assume f64 arithmetic.

pub mod baselines;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod labels;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod moe;
pub mod nn;
pub mod noise;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision aliases.
pub type Matrix64 = matrix::Matrix<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type Batch64 = data::Batch<f64>;
pub type AdmoeModel64 = model::AdmoeModel<f64>;
pub type ModelGrads64 = model::ModelGrads<f64>;
pub type CrowdModel64 = baselines::CrowdModel<f64>;
pub type EnsembleBundle64 = baselines::EnsembleBundle<f64>;
pub type WeakGenerator64 = noise::WeakGenerator<f64>;
