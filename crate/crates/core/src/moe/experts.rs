use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

use crate::nn::{Activation, DenseCache, DenseGrads, DenseLayer, InitScheme};

use super::gate::GateDecision;

/// Bank of `m` identically shaped experts, each one dense ReLU layer
/// `hidden → hidden`.
#[derive(Clone, Debug)]
pub struct ExpertBank<T> {
    pub experts: Vec<DenseLayer<T>>,
}

/// Forward state for the backward pass: for each expert, which batch rows it
/// served, the dense cache over those rows, and its raw outputs (needed for
/// the gradient w.r.t. β).
pub struct MoeCache<T> {
    per_expert: Vec<Option<ExpertSlice<T>>>,
    batch: usize,
}

struct ExpertSlice<T> {
    rows: Vec<usize>,
    cache: DenseCache<T>,
    output: Matrix<T>,
}

impl<T: Scalar> ExpertBank<T> {
    pub fn init(num_experts: usize, hidden: usize, rng: &mut Rng) -> Self {
        ExpertBank {
            experts: (0..num_experts)
                .map(|_| {
                    DenseLayer::init(hidden, hidden, Activation::ReLU, InitScheme::HeUniform, rng)
                })
                .collect(),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.experts[0].in_dim()
    }

    pub fn param_count(&self) -> usize {
        self.experts.iter().map(|e| e.param_count()).sum()
    }

    /// Weighted sum over each sample's selected experts only; an expert is
    /// never evaluated on samples that did not select it.
    pub fn forward(
        &self,
        decision: &GateDecision<T>,
        h: &Matrix<T>,
    ) -> Result<(Matrix<T>, MoeCache<T>)> {
        let batch = h.rows();
        if decision.beta.rows() != batch {
            return Err(Error::DimMismatch {
                context: "moe_forward batch size",
                expected: batch,
                actual: decision.beta.rows(),
            });
        }
        if decision.beta.cols() != self.num_experts() {
            return Err(Error::DimMismatch {
                context: "moe_forward expert count",
                expected: self.num_experts(),
                actual: decision.beta.cols(),
            });
        }

        let mut out = Matrix::zeros(batch, self.hidden_dim());
        let mut per_expert = Vec::with_capacity(self.num_experts());
        for (e, expert) in self.experts.iter().enumerate() {
            let rows: Vec<usize> = (0..batch)
                .filter(|&j| decision.selected[j].contains(&e))
                .collect();
            if rows.is_empty() {
                per_expert.push(None);
                continue;
            }
            let sub = h.gather_rows(&rows);
            let (sub_out, cache) = expert.forward(&sub)?;
            for (i, &j) in rows.iter().enumerate() {
                let w = decision.beta.get(j, e);
                let dst = out.row_mut(j);
                for (d, &s) in dst.iter_mut().zip(sub_out.row(i)) {
                    *d = *d + w * s;
                }
            }
            per_expert.push(Some(ExpertSlice {
                rows,
                cache,
                output: sub_out,
            }));
        }
        Ok((out, MoeCache { per_expert, batch }))
    }

    /// Backward through the weighted sum.
    ///
    /// Accumulates expert parameter gradients into `grads` and returns
    /// `(d_h, d_beta)`: the gradient w.r.t. the trunk output and w.r.t. the
    /// gate weights β (nonzero only at selected positions).
    pub fn backward(
        &self,
        decision: &GateDecision<T>,
        cache: &MoeCache<T>,
        upstream: &Matrix<T>,
        grads: &mut [DenseGrads<T>],
    ) -> Result<(Matrix<T>, Matrix<T>)> {
        if upstream.rows() != cache.batch {
            return Err(Error::DimMismatch {
                context: "moe_backward stale cache",
                expected: cache.batch,
                actual: upstream.rows(),
            });
        }
        if grads.len() != self.num_experts() {
            return Err(Error::DimMismatch {
                context: "moe_backward gradient buffers",
                expected: self.num_experts(),
                actual: grads.len(),
            });
        }

        let hidden = self.hidden_dim();
        let mut d_h = Matrix::zeros(cache.batch, hidden);
        let mut d_beta = Matrix::zeros(cache.batch, self.num_experts());

        for (e, slice) in cache.per_expert.iter().enumerate() {
            let Some(slice) = slice else { continue };

            // dβ_e^j = <upstream_j, E_e(h_j)>; expert cotangent = β_e^j · upstream_j
            let mut cot = Matrix::zeros(slice.rows.len(), hidden);
            for (i, &j) in slice.rows.iter().enumerate() {
                let up = upstream.row(j);
                let out = slice.output.row(i);
                let mut dot = T::zero();
                for (&u, &o) in up.iter().zip(out) {
                    dot = dot + u * o;
                }
                d_beta.set(j, e, dot);

                let w = decision.beta.get(j, e);
                for (c, &u) in cot.row_mut(i).iter_mut().zip(up) {
                    *c = w * u;
                }
            }

            let sub_dh = self.experts[e].backward(&slice.cache, &cot, &mut grads[e])?;
            for (i, &j) in slice.rows.iter().enumerate() {
                for (d, &s) in d_h.row_mut(j).iter_mut().zip(sub_dh.row(i)) {
                    *d = *d + s;
                }
            }
        }
        Ok((d_h, d_beta))
    }
}
