use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, Scalar};

use super::gate::GateDecision;

/// Load-balancing loss: squared coefficient of variation of the batch
/// importance vector,
///
/// `L = Var(I) / Mean(I)²`   (population variance)
///
/// Zero exactly when every expert receives equal mass; at full collapse
/// onto one of m experts it equals m−1 (CV² is scale-invariant).
///
/// `I` is the *soft* importance — the per-expert column sum of selected
/// pre-mask softmax mass — and the returned `batch × m` gradient is with
/// respect to those soft values (each row carries dL/dI, a column sum's
/// gradient). Differentiating the renormalized weights instead would yield
/// an identically zero signal at k=1, where every kept weight is the
/// constant 1.
pub fn load_balance_loss<T: Scalar>(decision: &GateDecision<T>) -> Result<(T, Matrix<T>)> {
    let batch = decision.beta.rows();
    if batch == 0 {
        return Err(Error::EmptyBatch {
            context: "load_balance_loss",
        });
    }
    let m = decision.beta.cols();
    let m_t = cast::<T>(m as f64);

    let mean: T = decision.soft_importance.iter().copied().sum::<T>() / m_t;
    let var: T = decision
        .soft_importance
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<T>()
        / m_t;
    let loss = var / (mean * mean);

    // dL/dI_i = (2/m)(I_i - μ)/μ² - 2·Var/(m·μ³)
    let two = cast::<T>(2.0);
    let mut d_importance = vec![T::zero(); m];
    for (g, &imp) in d_importance.iter_mut().zip(&decision.soft_importance) {
        *g = two * (imp - mean) / (m_t * mean * mean) - two * var / (m_t * mean * mean * mean);
    }

    let mut grad = Matrix::zeros(batch, m);
    for r in 0..batch {
        grad.row_mut(r).copy_from_slice(&d_importance);
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff, max_rel_error};

    fn decision_from_beta(beta: Matrix<f64>) -> GateDecision<f64> {
        let importance = beta.col_sums();
        let selected = (0..beta.rows())
            .map(|r| {
                (0..beta.cols())
                    .filter(|&c| beta.get(r, c) > 0.0)
                    .collect()
            })
            .collect();
        GateDecision {
            soft_importance: importance.clone(),
            beta,
            selected,
            importance,
        }
    }

    #[test]
    fn uniform_importance_has_zero_loss() {
        let beta = Matrix::from_vec(2, 4, vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5]);
        let (loss, _) = load_balance_loss(&decision_from_beta(beta)).unwrap();
        assert!(loss.abs() < 1e-15);
    }

    #[test]
    fn full_collapse_equals_m_minus_one() {
        // all weight on expert 0: importance = [B, 0, 0, 0]
        let batch = 6;
        let mut beta = Matrix::zeros(batch, 4);
        for r in 0..batch {
            beta.set(r, 0, 1.0);
        }
        let (loss, _) = load_balance_loss(&decision_from_beta(beta)).unwrap();
        // hand computation: μ = B/4, Var = 3B²/16, CV² = 3
        assert!((loss - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences_on_beta() {
        let beta0 = vec![
            0.6, 0.4, 0.0, 0.0, //
            0.0, 0.3, 0.7, 0.0, //
            0.2, 0.0, 0.0, 0.8, //
        ];
        let (_, grad) = load_balance_loss(&decision_from_beta(Matrix::from_vec(
            3,
            4,
            beta0.clone(),
        )))
        .unwrap();

        // loss as a free function of every β entry
        let numeric = central_diff(
            |b| {
                let d = decision_from_beta(Matrix::from_vec(3, 4, b.to_vec()));
                load_balance_loss(&d).unwrap().0
            },
            &beta0,
            1e-6,
        );
        assert!(max_rel_error(grad.data(), &numeric) < 1e-4);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let d = decision_from_beta(Matrix::zeros(0, 4));
        assert!(matches!(
            load_balance_loss(&d),
            Err(Error::EmptyBatch { .. })
        ));
    }
}
