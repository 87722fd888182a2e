//! The full detection model: dense trunk, optional mixture-of-experts layer
//! with label-aware gating, sigmoid output head, and the multi-source loss.
//!
//! Architecture (per sample):
//!
//! ```text
//!   trunk input  = [x | y_w]  (labels appended when labels_as_input)
//!   h            = dense(trunk input)            shared ReLU layer
//!   o            = Σ β_i·E_i(h)  or  dense(h)    MoE on / off
//!   score        = σ(head(o))
//!   β            = top-k softmax(gate([x | Emb(y_w)]))
//! ```
//!
//! The expert bank sits between the shared layer and the output head and
//! holds most of the parameter budget, so specialization has real capacity
//! to work with. With `use_moe = false` the MoE slot is a plain dense ReLU
//! layer of the same depth, and the hidden width is enlarged so total
//! parameter counts match the MoE variant — comparisons between the two
//! are at equal capacity.

mod case_study;
mod clean;
mod snapshot;
mod train;

pub use case_study::{expert_case_study, CaseStudyReport};
pub use clean::append_clean_labels;
pub use snapshot::{load_snapshot, save_snapshot};
pub use train::{fit, test_auc, test_scores, LossMode, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::moe::{load_balance_loss, EmbeddingTable, ExpertBank, Gate, GateCache, GateDecision, MoeCache};
use crate::nn::{
    bce_accumulate, Activation, BlockMut, BlockRef, DenseCache, DenseGrads, DenseLayer, InitScheme,
};
use crate::rng::rng_from_seed;
use crate::scalar::{cast, to_f64, Scalar};

/// Architecture description. `hidden: None` sizes the hidden width so the
/// trainable parameter count lands as close as possible to `param_budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub num_sources: usize,
    pub use_moe: bool,
    pub labels_as_input: bool,
    pub num_experts: usize,
    pub top_k: usize,
    pub embedding_dim: usize,
    pub hidden: Option<usize>,
    pub param_budget: usize,
}

pub const DEFAULT_PARAM_BUDGET: usize = 18_000;

impl ModelConfig {
    /// The full model with defaults: 4 experts, top-2, 8-dim embedding.
    pub fn admoe(feature_dim: usize, num_sources: usize) -> Self {
        ModelConfig {
            feature_dim,
            num_sources,
            use_moe: true,
            labels_as_input: true,
            num_experts: 4,
            top_k: 2,
            embedding_dim: 8,
            hidden: None,
            param_budget: DEFAULT_PARAM_BUDGET,
        }
    }

    /// Plain MLP baseline (no MoE, no labels as input), same depth.
    pub fn mlp(feature_dim: usize, num_sources: usize) -> Self {
        ModelConfig {
            use_moe: false,
            labels_as_input: false,
            ..Self::admoe(feature_dim, num_sources)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.use_moe && (self.top_k == 0 || self.top_k > self.num_experts) {
            return Err(Error::config(format!(
                "top-k must satisfy 1 <= k <= m (got k={}, m={})",
                self.top_k, self.num_experts
            )));
        }
        if self.num_sources == 0 {
            return Err(Error::config("model needs at least one noisy-label source"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim must be positive"));
        }
        if self.use_moe && self.embedding_dim == 0 {
            return Err(Error::config("embedding_dim must be positive with MoE"));
        }
        Ok(())
    }

    pub fn trunk_input_dim(&self) -> usize {
        self.feature_dim + if self.labels_as_input { self.num_sources } else { 0 }
    }

    /// Exact trainable parameter count at a given hidden width.
    pub fn param_count_at(&self, hidden: usize) -> usize {
        let h = hidden;
        let input = self.trunk_input_dim();
        let trunk = input * h + h;
        let head = h + 1;
        let middle = if self.use_moe {
            let emb = self.num_sources * self.embedding_dim;
            let gate = (self.feature_dim + self.embedding_dim) * self.num_experts + self.num_experts;
            let experts = self.num_experts * (h * h + h);
            emb + gate + experts
        } else {
            h * h + h
        };
        trunk + middle + head
    }

    /// Hidden width: explicit, or the width whose parameter count is
    /// closest to the budget (smallest width on ties).
    pub fn resolved_hidden(&self) -> usize {
        if let Some(h) = self.hidden {
            return h;
        }
        (1..=1024)
            .min_by_key(|&h| {
                let p = self.param_count_at(h) as i64;
                (p - self.param_budget as i64).abs()
            })
            .unwrap()
    }
}

/// Gradient buffers mirroring [`AdmoeModel`]'s tensors.
#[derive(Clone, Debug)]
pub struct ModelGrads<T> {
    pub trunk: Vec<DenseGrads<T>>,
    pub embedding: Option<Matrix<T>>,
    pub gate: Option<DenseGrads<T>>,
    pub experts: Option<Vec<DenseGrads<T>>>,
    pub head: DenseGrads<T>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn zeros_like(model: &AdmoeModel<T>) -> Self {
        ModelGrads {
            trunk: model.trunk.iter().map(DenseGrads::zeros_like).collect(),
            embedding: model
                .embedding
                .as_ref()
                .map(|e| Matrix::zeros(e.sources(), e.dim())),
            gate: model.gate.as_ref().map(|g| DenseGrads::zeros_like(&g.linear)),
            experts: model
                .experts
                .as_ref()
                .map(|bank| bank.experts.iter().map(DenseGrads::zeros_like).collect()),
            head: DenseGrads::zeros_like(&model.head),
        }
    }

    pub fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        let mut blocks = Vec::new();
        for (i, g) in self.trunk.iter().enumerate() {
            blocks.push(BlockRef::new(format!("trunk.{i}.weights"), g.d_weights.data()));
            blocks.push(BlockRef::new(format!("trunk.{i}.bias"), &g.d_bias));
        }
        if let Some(e) = &self.embedding {
            blocks.push(BlockRef::new("embedding.table", e.data()));
        }
        if let Some(g) = &self.gate {
            blocks.push(BlockRef::new("gate.weights", g.d_weights.data()));
            blocks.push(BlockRef::new("gate.bias", &g.d_bias));
        }
        if let Some(experts) = &self.experts {
            for (i, g) in experts.iter().enumerate() {
                blocks.push(BlockRef::new(format!("experts.{i}.weights"), g.d_weights.data()));
                blocks.push(BlockRef::new(format!("experts.{i}.bias"), &g.d_bias));
            }
        }
        blocks.push(BlockRef::new("head.weights", self.head.d_weights.data()));
        blocks.push(BlockRef::new("head.bias", &self.head.d_bias));
        blocks
    }
}

/// Which noisy-label sources the batch loss targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossTarget {
    /// Weight-normalized average over all sources.
    Combine,
    /// One source treated as the pseudo-clean target.
    Single(usize),
}

/// Forward state kept for the backward pass.
pub struct ForwardCache<T> {
    pub(crate) trunk: Vec<DenseCache<T>>,
    pub(crate) gate_cache: Option<GateCache<T>>,
    pub decision: Option<GateDecision<T>>,
    pub(crate) moe_cache: Option<MoeCache<T>>,
    pub(crate) head_cache: DenseCache<T>,
    pub scores: Vec<T>,
}

/// Trunk + (MoE | dense) + head with every parameter owned directly.
#[derive(Clone, Debug)]
pub struct AdmoeModel<T> {
    pub config: ModelConfig,
    pub trunk: Vec<DenseLayer<T>>,
    pub embedding: Option<EmbeddingTable<T>>,
    pub gate: Option<Gate<T>>,
    pub experts: Option<ExpertBank<T>>,
    pub head: DenseLayer<T>,
}

impl<T: Scalar> AdmoeModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let hidden = config.resolved_hidden();
        let config = ModelConfig {
            hidden: Some(hidden),
            ..config
        };
        let mut rng = rng_from_seed(seed);

        let mut trunk = vec![DenseLayer::init(
            config.trunk_input_dim(),
            hidden,
            Activation::ReLU,
            InitScheme::HeUniform,
            &mut rng,
        )];

        let (embedding, gate, experts) = if config.use_moe {
            let embedding = EmbeddingTable::init(config.num_sources, config.embedding_dim, &mut rng);
            let gate = Gate::new(
                config.feature_dim,
                config.embedding_dim,
                config.num_experts,
                config.top_k,
                &mut rng,
            )?;
            let experts = ExpertBank::init(config.num_experts, hidden, &mut rng);
            (Some(embedding), Some(gate), Some(experts))
        } else {
            trunk.push(DenseLayer::init(
                hidden,
                hidden,
                Activation::ReLU,
                InitScheme::HeUniform,
                &mut rng,
            ));
            (None, None, None)
        };

        let head = DenseLayer::init(hidden, 1, Activation::Sigmoid, InitScheme::XavierUniform, &mut rng);

        Ok(AdmoeModel {
            config,
            trunk,
            embedding,
            gate,
            experts,
            head,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden.expect("hidden resolved at construction")
    }

    /// Exact trainable parameter count (matches `param_blocks` contents).
    pub fn param_count(&self) -> usize {
        self.param_blocks().iter().map(|b| b.data.len()).sum()
    }

    pub fn param_blocks(&self) -> Vec<BlockRef<'_, T>> {
        let mut blocks = Vec::new();
        for (i, l) in self.trunk.iter().enumerate() {
            blocks.push(BlockRef::new(format!("trunk.{i}.weights"), l.weights.data()));
            blocks.push(BlockRef::new(format!("trunk.{i}.bias"), &l.bias));
        }
        if let Some(e) = &self.embedding {
            blocks.push(BlockRef::new("embedding.table", e.table.data()));
        }
        if let Some(g) = &self.gate {
            blocks.push(BlockRef::new("gate.weights", g.linear.weights.data()));
            blocks.push(BlockRef::new("gate.bias", &g.linear.bias));
        }
        if let Some(bank) = &self.experts {
            for (i, ex) in bank.experts.iter().enumerate() {
                blocks.push(BlockRef::new(format!("experts.{i}.weights"), ex.weights.data()));
                blocks.push(BlockRef::new(format!("experts.{i}.bias"), &ex.bias));
            }
        }
        blocks.push(BlockRef::new("head.weights", self.head.weights.data()));
        blocks.push(BlockRef::new("head.bias", &self.head.bias));
        blocks
    }

    pub fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        let mut blocks = Vec::new();
        for (i, l) in self.trunk.iter_mut().enumerate() {
            blocks.push(BlockMut::new(format!("trunk.{i}.weights"), l.weights.data_mut()));
            blocks.push(BlockMut::new(format!("trunk.{i}.bias"), &mut l.bias));
        }
        if let Some(e) = &mut self.embedding {
            blocks.push(BlockMut::new("embedding.table", e.table.data_mut()));
        }
        if let Some(g) = &mut self.gate {
            blocks.push(BlockMut::new("gate.weights", g.linear.weights.data_mut()));
            blocks.push(BlockMut::new("gate.bias", &mut g.linear.bias));
        }
        if let Some(bank) = &mut self.experts {
            for (i, ex) in bank.experts.iter_mut().enumerate() {
                blocks.push(BlockMut::new(format!("experts.{i}.weights"), ex.weights.data_mut()));
                blocks.push(BlockMut::new(format!("experts.{i}.bias"), &mut ex.bias));
            }
        }
        blocks.push(BlockMut::new("head.weights", self.head.weights.data_mut()));
        blocks.push(BlockMut::new("head.bias", &mut self.head.bias));
        blocks
    }

    /// All parameters flattened to f64, in `param_blocks` order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for b in self.param_blocks() {
            v.extend(b.data.iter().map(|&x| to_f64(x)));
        }
        v
    }

    pub fn set_flat_params(&mut self, theta: &[f64]) {
        let mut offset = 0;
        for b in self.param_blocks_mut() {
            let len = b.data.len();
            for (dst, &src) in b.data.iter_mut().zip(&theta[offset..offset + len]) {
                *dst = cast(src);
            }
            offset += len;
        }
        assert_eq!(offset, theta.len(), "flat parameter length");
    }

    fn labels_matrix(&self, weak: &LabelMatrix) -> Matrix<T> {
        Matrix::from_fn(weak.rows(), weak.sources(), |r, s| {
            if weak.is_present(r, s) && weak.value(r, s) == 1 {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// True when the forward pass reads the noisy labels at all.
    fn consumes_labels(&self) -> bool {
        self.config.use_moe || self.config.labels_as_input
    }

    fn check_inputs(&self, features: &Matrix<T>, weak: &LabelMatrix) -> Result<()> {
        if features.cols() != self.config.feature_dim {
            return Err(Error::DimMismatch {
                context: "model forward feature width",
                expected: self.config.feature_dim,
                actual: features.cols(),
            });
        }
        // a plain MLP ignores the label columns, so any source count scores
        if self.consumes_labels() {
            if weak.sources() != self.config.num_sources {
                return Err(Error::DimMismatch {
                    context: "model forward source count",
                    expected: self.config.num_sources,
                    actual: weak.sources(),
                });
            }
            if weak.rows() != features.rows() {
                return Err(Error::DimMismatch {
                    context: "model forward batch size",
                    expected: features.rows(),
                    actual: weak.rows(),
                });
            }
            weak.validate_binary()?;
        }
        Ok(())
    }

    /// Full forward pass; scores are σ(head output) in (0, 1).
    pub fn forward(&self, features: &Matrix<T>, weak: &LabelMatrix) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_inputs(features, weak)?;

        let trunk_in = if self.config.labels_as_input {
            features.hstack(&self.labels_matrix(weak))
        } else {
            features.clone()
        };

        let mut trunk_caches = Vec::with_capacity(self.trunk.len());
        let mut h = trunk_in;
        for layer in &self.trunk {
            let (out, cache) = layer.forward(&h)?;
            trunk_caches.push(cache);
            h = out;
        }

        let (o, gate_cache, decision, moe_cache) = if self.config.use_moe {
            let embedding = self.embedding.as_ref().unwrap();
            let gate = self.gate.as_ref().unwrap();
            let experts = self.experts.as_ref().unwrap();
            let emb = embedding.embed(weak)?;
            let (decision, gcache) = gate.forward(features, &emb)?;
            let (o, mcache) = experts.forward(&decision, &h)?;
            (o, Some(gcache), Some(decision), Some(mcache))
        } else {
            (h, None, None, None)
        };

        let (score_mat, head_cache) = self.head.forward(&o)?;
        let scores: Vec<T> = (0..score_mat.rows()).map(|r| score_mat.get(r, 0)).collect();

        Ok((
            scores.clone(),
            ForwardCache {
                trunk: trunk_caches,
                gate_cache,
                decision,
                moe_cache,
                head_cache,
                scores,
            },
        ))
    }

    /// Scores only (evaluation path).
    pub fn scores(&self, features: &Matrix<T>, weak: &LabelMatrix) -> Result<Vec<T>> {
        Ok(self.forward(features, weak)?.0)
    }

    /// Gating decision for a batch (no expert evaluation).
    pub fn decide(&self, features: &Matrix<T>, weak: &LabelMatrix) -> Result<GateDecision<T>> {
        self.check_inputs(features, weak)?;
        let embedding = self
            .embedding
            .as_ref()
            .ok_or_else(|| Error::config("decide() requires use_moe"))?;
        let gate = self.gate.as_ref().unwrap();
        let emb = embedding.embed(weak)?;
        Ok(gate.forward(features, &emb)?.0)
    }

    /// Forward with the gate overridden to a single forced expert.
    pub fn forward_forced_expert(
        &self,
        features: &Matrix<T>,
        weak: &LabelMatrix,
        expert: usize,
    ) -> Result<Vec<T>> {
        self.check_inputs(features, weak)?;
        let experts = self
            .experts
            .as_ref()
            .ok_or_else(|| Error::config("forced-expert forward requires use_moe"))?;
        if expert >= experts.num_experts() {
            return Err(Error::config(format!(
                "expert index {expert} out of range (m={})",
                experts.num_experts()
            )));
        }

        let trunk_in = if self.config.labels_as_input {
            features.hstack(&self.labels_matrix(weak))
        } else {
            features.clone()
        };
        let mut h = trunk_in;
        for layer in &self.trunk {
            h = layer.forward(&h)?.0;
        }
        let decision = GateDecision::force_expert(h.rows(), experts.num_experts(), expert);
        let (o, _) = experts.forward(&decision, &h)?;
        let (score_mat, _) = self.head.forward(&o)?;
        Ok((0..score_mat.rows()).map(|r| score_mat.get(r, 0)).collect())
    }

    /// Loss for one batch plus exact gradients for every parameter.
    ///
    /// `alpha` scales the load-balancing term (ignored without MoE). The
    /// realized loss is deterministic given `target`; sampling a target per
    /// batch is the training loop's job.
    pub fn batch_loss(
        &self,
        batch: &crate::data::Batch<T>,
        target: LossTarget,
        alpha: f64,
    ) -> Result<(f64, ModelGrads<T>)> {
        let (loss, grads, _) = self.batch_loss_impl(batch, target, alpha)?;
        Ok((loss, grads))
    }

    /// Loss value only (used by the finite-difference suites).
    pub fn loss_value(&self, batch: &crate::data::Batch<T>, target: LossTarget, alpha: f64) -> Result<f64> {
        let (scores, cache) = self.forward(&batch.features, &batch.weak)?;
        let (objective, _, _) = self.objective_terms(batch, target, alpha, &scores, cache.decision.as_ref())?;
        Ok(objective)
    }

    /// Shared loss arithmetic: returns (total loss, d loss/d scores,
    /// d loss/d beta from the balance term).
    fn objective_terms(
        &self,
        batch: &crate::data::Batch<T>,
        target: LossTarget,
        alpha: f64,
        scores: &[T],
        decision: Option<&GateDecision<T>>,
    ) -> Result<(f64, Vec<T>, Option<Matrix<T>>)> {
        let t = batch.weak.sources();
        if t == 0 {
            return Err(Error::config("batch has no noisy-label sources"));
        }
        if batch.is_empty() {
            return Err(Error::EmptyBatch {
                context: "batch_loss",
            });
        }
        let n = batch.len();

        let sources: Vec<(usize, f64)> = match target {
            LossTarget::Combine => (0..t).map(|s| (s, batch.source_weights[s])).collect(),
            LossTarget::Single(s) => {
                if s >= t {
                    return Err(Error::config(format!(
                        "loss target source {s} out of range (t={t})"
                    )));
                }
                // one source as pseudo-clean target; its weight scales the
                // whole term rather than cancelling in the normalizer
                vec![(s, 1.0)]
            }
        };

        let mut grad = vec![T::zero(); n];
        let mut sum_loss = T::zero();
        let mut sum_weight = T::zero();
        let mut targets = vec![0u8; n];
        let mut weights = vec![T::zero(); n];
        for &(s, w) in &sources {
            for j in 0..n {
                targets[j] = if batch.weak.is_present(j, s) {
                    batch.weak.value(j, s)
                } else {
                    0
                };
                weights[j] = if batch.weak.is_present(j, s) {
                    cast(w)
                } else {
                    T::zero()
                };
            }
            let (l, w_sum) = bce_accumulate(scores, &targets, &weights, &mut grad);
            sum_loss += l;
            sum_weight += w_sum;
        }

        let scale = match target {
            LossTarget::Combine => T::one(),
            LossTarget::Single(s) => cast(batch.source_weights[s]),
        };
        let mut objective = T::zero();
        if sum_weight > T::zero() {
            objective = scale * sum_loss / sum_weight;
            let norm = scale / sum_weight;
            for g in grad.iter_mut() {
                *g = *g * norm;
            }
        } else {
            grad.iter_mut().for_each(|g| *g = T::zero());
        }

        let mut balance_grad = None;
        if let Some(decision) = decision {
            if alpha > 0.0 {
                let (lg, lg_grad) = load_balance_loss(decision)?;
                objective += cast::<T>(alpha) * lg;
                balance_grad = Some(lg_grad);
            }
        }
        Ok((to_f64(objective), grad, balance_grad))
    }

    fn batch_loss_impl(
        &self,
        batch: &crate::data::Batch<T>,
        target: LossTarget,
        alpha: f64,
    ) -> Result<(f64, ModelGrads<T>, Vec<T>)> {
        let (scores, cache) = self.forward(&batch.features, &batch.weak)?;
        let (objective, d_scores, balance_grad) =
            self.objective_terms(batch, target, alpha, &scores, cache.decision.as_ref())?;

        let mut grads = ModelGrads::zeros_like(self);
        let upstream = Matrix::from_vec(batch.len(), 1, d_scores);
        let d_o = self.head.backward(&cache.head_cache, &upstream, &mut grads.head)?;

        let d_h = if self.config.use_moe {
            let experts = self.experts.as_ref().unwrap();
            let gate = self.gate.as_ref().unwrap();
            let embedding = self.embedding.as_ref().unwrap();
            let decision = cache.decision.as_ref().unwrap();
            let moe_cache = cache.moe_cache.as_ref().unwrap();
            let gate_cache = cache.gate_cache.as_ref().unwrap();

            let expert_grads = grads.experts.as_mut().unwrap();
            let (d_h, d_beta) = experts.backward(decision, moe_cache, &d_o, expert_grads)?;
            // the balancing gradient targets the soft (pre-mask) gate mass
            let d_soft = balance_grad.map(|bg| {
                let a = cast::<T>(alpha);
                bg.map(|g| a * g)
            });
            let d_gate_in = gate.backward(
                gate_cache,
                decision,
                &d_beta,
                d_soft.as_ref(),
                grads.gate.as_mut().unwrap(),
            )?;

            // embedding part of the gate input gradient
            let d = self.config.feature_dim;
            let e = embedding.dim();
            let mut d_emb = Matrix::zeros(batch.len(), e);
            for r in 0..batch.len() {
                d_emb.row_mut(r).copy_from_slice(&d_gate_in.row(r)[d..d + e]);
            }
            embedding.backward(&batch.weak, &d_emb, grads.embedding.as_mut().unwrap())?;
            d_h
        } else {
            d_o
        };

        // trunk backward, reverse order; input gradient is discarded (data)
        let mut upstream = d_h;
        for (layer, (cache, grad)) in self
            .trunk
            .iter()
            .zip(cache.trunk.iter().zip(grads.trunk.iter_mut()))
            .rev()
        {
            upstream = layer.backward(cache, &upstream, grad)?;
        }

        Ok((objective, grads, scores))
    }
}
