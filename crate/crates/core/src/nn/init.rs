use rand::Rng as _;

use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::{cast, Scalar};

/// Weight initialization scheme.
///
/// He for ReLU layers, Xavier for sigmoid/linear heads. Draws happen in f64
/// so the stream is identical regardless of the scalar instantiation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    HeUniform,
    XavierUniform,
}

impl InitScheme {
    /// Half-width of the uniform range for a `fan_in × fan_out` tensor.
    pub fn bound(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            InitScheme::HeUniform => (6.0 / fan_in as f64).sqrt(),
            InitScheme::XavierUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        }
    }

    /// Variance of the resulting distribution (uniform on ±bound).
    pub fn variance(self, fan_in: usize, fan_out: usize) -> f64 {
        let b = self.bound(fan_in, fan_out);
        b * b / 3.0
    }
}

/// Sample a `fan_in × fan_out` parameter tensor. Deterministic given the RNG
/// state.
pub fn init_params<T: Scalar>(
    fan_in: usize,
    fan_out: usize,
    scheme: InitScheme,
    rng: &mut Rng,
) -> Matrix<T> {
    let bound = scheme.bound(fan_in, fan_out);
    Matrix::from_fn(fan_in, fan_out, |_, _| {
        cast::<T>(bound * (2.0 * rng.random::<f64>() - 1.0))
    })
}
