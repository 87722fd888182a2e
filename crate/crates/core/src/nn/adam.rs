use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

use super::params::{BlockMut, BlockRef};

/// Adam with bias correction.
///
/// Holds one first/second-moment pair per parameter tensor, allocated on the
/// first step and shape-checked on every later one. The step counter is
/// global: one increment per call to [`Adam::step`], covering all tensors.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: u64,
    slots: Vec<Slot<T>>,
}

#[derive(Clone, Debug)]
struct Slot<T> {
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr: cast(lr),
            beta1: cast(0.9),
            beta2: cast(0.999),
            epsilon: cast(1e-8),
            step: 0,
            slots: Vec::new(),
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = cast(beta1);
        self.beta2 = cast(beta2);
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One optimizer step over every parameter tensor.
    ///
    /// `params` and `grads` must list the same tensors in the same order.
    /// Errors name the offending tensor when a gradient is non-finite or a
    /// parameter goes non-finite after the update.
    pub fn step(&mut self, params: &mut [BlockMut<'_, T>], grads: &[BlockRef<'_, T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::DimMismatch {
                context: "adam_step tensor count",
                expected: params.len(),
                actual: grads.len(),
            });
        }
        if self.slots.is_empty() {
            self.slots = params
                .iter()
                .map(|p| Slot {
                    m: vec![T::zero(); p.data.len()],
                    v: vec![T::zero(); p.data.len()],
                })
                .collect();
        }
        if self.slots.len() != params.len() {
            return Err(Error::DimMismatch {
                context: "adam_step slot count",
                expected: self.slots.len(),
                actual: params.len(),
            });
        }

        self.step += 1;
        let t = self.step as f64;
        let corr1 = T::one() - self.beta1.powf(cast(t));
        let corr2 = T::one() - self.beta2.powf(cast(t));

        for ((p, g), slot) in params.iter_mut().zip(grads).zip(self.slots.iter_mut()) {
            if p.data.len() != g.data.len() || p.data.len() != slot.m.len() {
                return Err(Error::DimMismatch {
                    context: "adam_step tensor shape",
                    expected: slot.m.len(),
                    actual: g.data.len(),
                });
            }
            if !g.data.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteGrad {
                    tensor: g.name.clone(),
                });
            }

            let one = T::one();
            for i in 0..p.data.len() {
                let grad = g.data[i];
                slot.m[i] = self.beta1 * slot.m[i] + (one - self.beta1) * grad;
                slot.v[i] = self.beta2 * slot.v[i] + (one - self.beta2) * grad * grad;
                let m_hat = slot.m[i] / corr1;
                let v_hat = slot.v[i] / corr2;
                p.data[i] = p.data[i] - self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
            if !p.data.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteParam {
                    tensor: p.name.clone(),
                });
            }
        }
        Ok(())
    }
}
