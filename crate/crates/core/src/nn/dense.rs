use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::activation::Activation;
use super::init::{init_params, InitScheme};
use super::params::{BlockMut, BlockRef};

/// Dense layer: `output = activation(input · weights + bias)`.
///
/// Weights are `in_dim × out_dim`, inputs are row vectors, so a batch is
/// `batch × in_dim`. Dimensions are fixed at construction.
#[derive(Clone, Debug)]
pub struct DenseLayer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

/// Values saved by the forward pass for the matching backward pass.
#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    pub input: Matrix<T>,
    pub pre_activation: Matrix<T>,
}

/// Gradient accumulator, shape-congruent with its layer.
#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub d_weights: Matrix<T>,
    pub d_bias: Vec<T>,
}

impl<T: Scalar> DenseGrads<T> {
    pub fn zeros_like(layer: &DenseLayer<T>) -> Self {
        DenseGrads {
            d_weights: Matrix::zeros(layer.in_dim(), layer.out_dim()),
            d_bias: vec![T::zero(); layer.out_dim()],
        }
    }

    pub fn zero(&mut self) {
        self.d_weights.fill(T::zero());
        self.d_bias.iter_mut().for_each(|b| *b = T::zero());
    }
}

impl<T: Scalar> DenseLayer<T> {
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        scheme: InitScheme,
        rng: &mut Rng,
    ) -> Self {
        DenseLayer {
            weights: init_params(in_dim, out_dim, scheme, rng),
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }

    pub fn from_parts(weights: Matrix<T>, bias: Vec<T>, activation: Activation) -> Self {
        assert_eq!(weights.cols(), bias.len(), "bias length");
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn param_blocks(&self) -> Vec<BlockRef<'_, T>> {
        vec![
            BlockRef::new("weights", self.weights.data()),
            BlockRef::new("bias", &self.bias),
        ]
    }

    pub fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        vec![
            BlockMut::new("weights", self.weights.data_mut()),
            BlockMut::new("bias", &mut self.bias),
        ]
    }

    /// Batched forward pass; the cache holds what backward needs.
    pub fn forward(&self, input: &Matrix<T>) -> Result<(Matrix<T>, DenseCache<T>)> {
        if input.cols() != self.in_dim() {
            return Err(Error::DimMismatch {
                context: "dense_forward input width",
                expected: self.in_dim(),
                actual: input.cols(),
            });
        }
        let mut pre = input.matmul(&self.weights);
        pre.add_row_bias(&self.bias);
        let output = pre.map(|z| self.activation.apply(z));
        Ok((
            output,
            DenseCache {
                input: input.clone(),
                pre_activation: pre,
            },
        ))
    }

    /// Exact chain-rule backward pass.
    ///
    /// Accumulates into `grads` (callers zero the buffer per minibatch) and
    /// returns the gradient with respect to the layer input.
    pub fn backward(
        &self,
        cache: &DenseCache<T>,
        upstream: &Matrix<T>,
        grads: &mut DenseGrads<T>,
    ) -> Result<Matrix<T>> {
        if upstream.cols() != self.out_dim() {
            return Err(Error::DimMismatch {
                context: "dense_backward upstream width",
                expected: self.out_dim(),
                actual: upstream.cols(),
            });
        }
        if cache.input.rows() != upstream.rows() || cache.input.cols() != self.in_dim() {
            return Err(Error::DimMismatch {
                context: "dense_backward stale or mismatched cache",
                expected: upstream.rows(),
                actual: cache.input.rows(),
            });
        }

        // dZ = upstream ⊙ activation'(pre)
        let mut dz = Matrix::zeros(upstream.rows(), upstream.cols());
        for r in 0..upstream.rows() {
            let up = upstream.row(r);
            let pre = cache.pre_activation.row(r);
            let out = dz.row_mut(r);
            for c in 0..up.len() {
                out[c] = up[c] * self.activation.derivative(pre[c]);
            }
        }

        cache.input.t_mul_acc(&dz, &mut grads.d_weights);
        for (b, s) in grads.d_bias.iter_mut().zip(dz.col_sums()) {
            *b = *b + s;
        }
        Ok(dz.mul_t(&self.weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff, max_rel_error};
    use crate::rng::rng_from_seed;
    use crate::scalar::to_f64;

    #[test]
    fn identity_map_passes_input_through() {
        let layer = DenseLayer::from_parts(
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            vec![0.0, 0.0],
            Activation::Identity,
        );
        let x = Matrix::from_vec(1, 2, vec![1.0, 1.0]);
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y.row(0), &[1.0, 1.0]);
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let layer = DenseLayer::from_parts(
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            vec![-5.0, -5.0],
            Activation::ReLU,
        );
        let x = Matrix::from_vec(1, 2, vec![1.0, 1.0]);
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn forward_matches_naive_matmul_oracle() {
        let mut rng = rng_from_seed(21);
        let layer: DenseLayer<f64> =
            DenseLayer::init(4, 3, Activation::Identity, InitScheme::XavierUniform, &mut rng);
        let x: Matrix<f64> = crate::nn::init_params(3, 4, InitScheme::XavierUniform, &mut rng);

        let (y, _) = layer.forward(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut want = to_f64(layer.bias[j]);
                for k in 0..4 {
                    want += to_f64(x.get(i, k)) * to_f64(layer.weights.get(k, j));
                }
                assert!((to_f64(y.get(i, j)) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn width_mismatch_is_a_structured_error() {
        let mut rng = rng_from_seed(2);
        let layer: DenseLayer<f64> =
            DenseLayer::init(4, 2, Activation::ReLU, InitScheme::HeUniform, &mut rng);
        let x = Matrix::zeros(1, 3);
        match layer.forward(&x) {
            Err(Error::DimMismatch {
                expected, actual, ..
            }) => {
                assert_eq!((expected, actual), (4, 3));
            }
            other => panic!("expected DimMismatch, got {other:?}"),
        }
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let mut rng = rng_from_seed(3);
        let layer: DenseLayer<f64> =
            DenseLayer::init(3, 2, Activation::Sigmoid, InitScheme::XavierUniform, &mut rng);
        let x = Matrix::from_fn(5, 3, |r, c| (r + c) as f64 * 0.1);
        let (_, cache) = layer.forward(&x).unwrap();
        let mut grads = DenseGrads::zeros_like(&layer);
        let dx = layer
            .backward(&cache, &Matrix::zeros(5, 2), &mut grads)
            .unwrap();
        assert!(grads.d_weights.data().iter().all(|g| *g == 0.0));
        assert!(grads.d_bias.iter().all(|g| *g == 0.0));
        assert!(dx.data().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn scalar_identity_layer_weight_grad_equals_input() {
        let layer = DenseLayer::from_parts(
            Matrix::from_vec(1, 1, vec![0.7]),
            vec![0.0],
            Activation::Identity,
        );
        let x = Matrix::from_vec(1, 1, vec![3.25]);
        let (_, cache) = layer.forward(&x).unwrap();
        let mut grads = DenseGrads::zeros_like(&layer);
        layer
            .backward(&cache, &Matrix::from_vec(1, 1, vec![1.0]), &mut grads)
            .unwrap();
        assert_eq!(grads.d_weights.get(0, 0), 3.25);
        assert_eq!(grads.d_bias[0], 1.0);
    }

    #[test]
    fn random_layer_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(8);
        let layer: DenseLayer<f64> =
            DenseLayer::init(3, 2, Activation::ReLU, InitScheme::HeUniform, &mut rng);
        let x = Matrix::from_fn(4, 3, |r, c| 0.37 * ((r * 3 + c) as f64).sin() + 0.2);
        // fixed cotangent so the scalar objective is sum(upstream ⊙ out)
        let upstream = Matrix::from_fn(4, 2, |r, c| 0.5 + 0.1 * (r as f64) - 0.2 * (c as f64));

        let (_, cache) = layer.forward(&x).unwrap();
        let mut grads = DenseGrads::zeros_like(&layer);
        layer.backward(&cache, &upstream, &mut grads).unwrap();
        let mut analytic = grads.d_weights.data().to_vec();
        analytic.extend_from_slice(&grads.d_bias);

        let mut probe = layer.clone();
        let theta: Vec<f64> = analytic.iter().map(|_| 0.0).collect();
        let mut flat = probe.weights.data().to_vec();
        flat.extend_from_slice(&probe.bias);
        assert_eq!(theta.len(), flat.len());

        let numeric = central_diff(
            |t| {
                let (w, b) = t.split_at(6);
                probe.weights = Matrix::from_vec(3, 2, w.to_vec());
                probe.bias = b.to_vec();
                let (y, _) = probe.forward(&x).unwrap();
                y.data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(a, u)| a * u)
                    .sum()
            },
            &flat,
            1e-5,
        );
        let err = max_rel_error(&analytic, &numeric);
        assert!(err < 1e-4, "rel error {err}");
    }
}
