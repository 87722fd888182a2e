use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

use crate::nn::{Activation, DenseGrads, DenseLayer, InitScheme};

/// Linear gating network over `[features | label embedding]` with top-k
/// softmax selection.
#[derive(Clone, Debug)]
pub struct Gate<T> {
    pub linear: DenseLayer<T>,
    pub k: usize,
}

/// Per-batch gating outcome.
///
/// `beta` rows have exactly `k` strictly positive entries summing to 1 and
/// exact zeros elsewhere. `selected` lists the chosen experts per row in
/// selection order (descending softmax weight, lowest index on ties), and
/// `importance` is the per-expert column sum of `beta` over the batch.
///
/// `soft_importance` is the column sum of the *pre-mask softmax* over
/// selected positions. The load-balancing loss differentiates through it:
/// the renormalized `beta` of a top-1 selection is the constant 1, so only
/// the soft mass carries a usable balancing gradient at every k.
#[derive(Clone, Debug)]
pub struct GateDecision<T> {
    pub beta: Matrix<T>,
    pub selected: Vec<Vec<usize>>,
    pub importance: Vec<T>,
    pub soft_importance: Vec<T>,
}

/// Forward values needed by the backward pass.
#[derive(Clone, Debug)]
pub struct GateCache<T> {
    /// Concatenated gate input, `batch × (d + e)`.
    pub input: Matrix<T>,
    /// Pre-mask softmax over all m experts.
    pub softmax: Matrix<T>,
}

impl<T: Scalar> GateDecision<T> {
    /// One-hot decision forcing a single expert for every row (used by the
    /// per-expert case study).
    pub fn force_expert(batch: usize, num_experts: usize, expert: usize) -> Self {
        assert!(expert < num_experts);
        let mut beta = Matrix::zeros(batch, num_experts);
        for r in 0..batch {
            beta.set(r, expert, T::one());
        }
        let mut importance = vec![T::zero(); num_experts];
        importance[expert] = T::from_usize(batch).unwrap();
        GateDecision {
            beta,
            selected: vec![vec![expert]; batch],
            soft_importance: importance.clone(),
            importance,
        }
    }

    /// Index of the strongest expert per row.
    pub fn argmax_expert(&self, row: usize) -> usize {
        self.selected[row][0]
    }
}

impl<T: Scalar> Gate<T> {
    pub fn new(
        feature_dim: usize,
        emb_dim: usize,
        num_experts: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if k == 0 || k > num_experts {
            return Err(Error::config(format!(
                "top-k must satisfy 1 <= k <= m (got k={k}, m={num_experts})"
            )));
        }
        Ok(Gate {
            linear: DenseLayer::init(
                feature_dim + emb_dim,
                num_experts,
                Activation::Identity,
                InitScheme::XavierUniform,
                rng,
            ),
            k,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.linear.out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.linear.param_count()
    }

    /// Softmax over the gate logits, keep the k largest weights per row
    /// (lowest expert index wins ties), renormalize them to sum to 1, zero
    /// the rest.
    pub fn forward(
        &self,
        features: &Matrix<T>,
        label_emb: &Matrix<T>,
    ) -> Result<(GateDecision<T>, GateCache<T>)> {
        if features.rows() != label_emb.rows() {
            return Err(Error::DimMismatch {
                context: "gate_forward batch size",
                expected: features.rows(),
                actual: label_emb.rows(),
            });
        }
        let input = features.hstack(label_emb);
        let (logits, dense_cache) = self.linear.forward(&input)?;

        let batch = logits.rows();
        let m = logits.cols();
        let k = self.k;
        let mut softmax = Matrix::zeros(batch, m);
        let mut beta = Matrix::zeros(batch, m);
        let mut selected = Vec::with_capacity(batch);
        let mut importance = vec![T::zero(); m];
        let mut soft_importance = vec![T::zero(); m];

        for r in 0..batch {
            let z = logits.row(r);
            let z_max = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
            let p_row = softmax.row_mut(r);
            let mut denom = T::zero();
            for (p, &zi) in p_row.iter_mut().zip(z) {
                *p = (zi - z_max).exp();
                denom += *p;
            }
            for p in p_row.iter_mut() {
                *p = *p / denom;
            }

            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                p_row[b]
                    .partial_cmp(&p_row[a])
                    .expect("softmax weights are finite")
                    .then(a.cmp(&b))
            });
            order.truncate(k);

            let kept: T = order.iter().map(|&i| p_row[i]).sum();
            let b_row = beta.row_mut(r);
            for &i in &order {
                b_row[i] = p_row[i] / kept;
                importance[i] += b_row[i];
                soft_importance[i] += p_row[i];
            }
            selected.push(order);
        }

        Ok((
            GateDecision {
                beta,
                selected,
                importance,
                soft_importance,
            },
            GateCache {
                input: dense_cache.input,
                softmax,
            },
        ))
    }

    /// Backward through renormalization, mask (held constant), and softmax.
    ///
    /// Two cotangent channels target the two differentiable products of the
    /// forward pass:
    ///
    /// - `d_beta`: gradient w.r.t. the masked, *renormalized* weights (the
    ///   expert-mixture path); unselected entries are ignored since those
    ///   weights are hard zeros;
    /// - `d_soft`: gradient w.r.t. the *pre-mask softmax* values at selected
    ///   positions (the load-balancing path; at k=1 the renormalized weight
    ///   is constant, so this is the only route a balancing signal has).
    ///
    /// Returns the gradient w.r.t. the concatenated gate input.
    pub fn backward(
        &self,
        cache: &GateCache<T>,
        decision: &GateDecision<T>,
        d_beta: &Matrix<T>,
        d_soft: Option<&Matrix<T>>,
        grads: &mut DenseGrads<T>,
    ) -> Result<Matrix<T>> {
        let batch = cache.softmax.rows();
        let m = cache.softmax.cols();
        if d_beta.rows() != batch || d_beta.cols() != m {
            return Err(Error::DimMismatch {
                context: "gate backward d_beta shape",
                expected: m,
                actual: d_beta.cols(),
            });
        }
        if let Some(ds) = d_soft {
            if ds.rows() != batch || ds.cols() != m {
                return Err(Error::DimMismatch {
                    context: "gate backward d_soft shape",
                    expected: m,
                    actual: ds.cols(),
                });
            }
        }

        let mut d_logits = Matrix::zeros(batch, m);
        for r in 0..batch {
            let p = cache.softmax.row(r);
            let sel = &decision.selected[r];
            let db = d_beta.row(r);

            // renormalized β_i = p_i / T over the selected set
            let kept: T = sel.iter().map(|&i| p[i]).sum();
            let inner: T = sel.iter().map(|&i| db[i] * p[i]).sum();

            let mut d_p = vec![T::zero(); m];
            for &i in sel {
                d_p[i] = (db[i] - inner / kept) / kept;
            }
            if let Some(ds) = d_soft {
                let row = ds.row(r);
                for &i in sel {
                    d_p[i] = d_p[i] + row[i];
                }
            }

            // softmax jacobian: d_z_j = p_j (d_p_j - Σ_l d_p_l p_l)
            let dot: T = d_p.iter().zip(p).map(|(&g, &pi)| g * pi).sum();
            let dz = d_logits.row_mut(r);
            for j in 0..m {
                dz[j] = p[j] * (d_p[j] - dot);
            }
        }

        // identity-activation dense backward
        cache.input.t_mul_acc(&d_logits, &mut grads.d_weights);
        for (b, s) in grads.d_bias.iter_mut().zip(d_logits.col_sums()) {
            *b = *b + s;
        }
        Ok(d_logits.mul_t(&self.linear.weights))
    }
}
