use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Predictions are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

/// Weighted mean binary cross-entropy and its exact gradient w.r.t. the
/// predictions.
///
/// Where the clamp binds, the gradient is zero — the exact derivative of the
/// clamped composite.
pub fn bce_loss<T: Scalar>(
    predicted: &[T],
    target: &[u8],
    sample_weight: &[T],
) -> Result<(T, Vec<T>)> {
    if predicted.len() != target.len() {
        return Err(Error::DimMismatch {
            context: "bce_loss targets",
            expected: predicted.len(),
            actual: target.len(),
        });
    }
    if predicted.len() != sample_weight.len() {
        return Err(Error::DimMismatch {
            context: "bce_loss weights",
            expected: predicted.len(),
            actual: sample_weight.len(),
        });
    }

    let mut grad = vec![T::zero(); predicted.len()];
    let (sum_loss, sum_weight) = bce_accumulate(predicted, target, sample_weight, &mut grad);
    if sum_weight <= T::zero() {
        return Ok((T::zero(), grad));
    }
    for g in grad.iter_mut() {
        *g = *g / sum_weight;
    }
    Ok((sum_loss / sum_weight, grad))
}

/// Unnormalized BCE accumulation: adds `w_j * dterm_j/dp_j` into `grad_acc`
/// and returns `(Σ w_j·term_j, Σ w_j)`.
///
/// This is the primitive behind both [`bce_loss`] and the multi-source loss,
/// which normalizes jointly across several target columns.
pub fn bce_accumulate<T: Scalar>(
    predicted: &[T],
    target: &[u8],
    sample_weight: &[T],
    grad_acc: &mut [T],
) -> (T, T) {
    let lo = cast::<T>(BCE_CLAMP);
    let hi = T::one() - lo;
    let mut sum_loss = T::zero();
    let mut sum_weight = T::zero();
    for j in 0..predicted.len() {
        let w = sample_weight[j];
        if w == T::zero() {
            continue;
        }
        let p = predicted[j];
        let clamped = p < lo || p > hi;
        let ph = if p < lo {
            lo
        } else if p > hi {
            hi
        } else {
            p
        };
        let y = if target[j] == 1 { T::one() } else { T::zero() };
        let term = -(y * ph.ln() + (T::one() - y) * (T::one() - ph).ln());
        sum_loss += w * term;
        sum_weight += w;
        if !clamped {
            grad_acc[j] += w * (ph - y) / (ph * (T::one() - ph));
        }
    }
    (sum_loss, sum_weight)
}
