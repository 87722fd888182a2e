use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::{cast, Scalar};

use crate::nn::{init_params, InitScheme};

/// Learnable `t × e` table turning a sample's binary noisy labels into a
/// continuous vector: the label-weighted average of the source rows,
/// `emb_j = (1/t) · Σ_i y_i^j · row_i`, so a sample flagged by nobody maps
/// to the zero vector and gating falls back to raw features alone.
#[derive(Clone, Debug)]
pub struct EmbeddingTable<T> {
    pub table: Matrix<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Rows start at unit-ish scale (uniform ±2.5, std ≈ 1.4) rather than
    /// Xavier: the embedding's whole job is to make gating label-aware, and
    /// with top-1 routing the gate only ever refines its initial partition,
    /// so flagged samples need label patterns that register against the
    /// feature part of the gate input from the first step.
    pub fn init(sources: usize, dim: usize, rng: &mut Rng) -> Self {
        let scale = 2.5;
        let xavier: Matrix<T> = init_params(sources, dim, InitScheme::XavierUniform, rng);
        let bound = InitScheme::XavierUniform.bound(sources, dim);
        EmbeddingTable {
            table: xavier.map(|x| x * cast(scale / bound)),
        }
    }

    pub fn sources(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn param_count(&self) -> usize {
        self.table.rows() * self.table.cols()
    }

    /// Embed a batch of label rows. Absent entries read as 0 (not flagged).
    pub fn embed(&self, labels: &LabelMatrix) -> Result<Matrix<T>> {
        if labels.sources() != self.sources() {
            return Err(Error::DimMismatch {
                context: "embed_labels source count",
                expected: self.sources(),
                actual: labels.sources(),
            });
        }
        labels.validate_binary()?;
        let t = self.sources();
        let inv_t = T::one() / cast::<T>(t as f64);
        let mut out = Matrix::zeros(labels.rows(), self.dim());
        for j in 0..labels.rows() {
            let row = out.row_mut(j);
            for i in 0..t {
                if labels.is_present(j, i) && labels.value(j, i) == 1 {
                    for (o, &w) in row.iter_mut().zip(self.table.row(i)) {
                        *o = *o + w * inv_t;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Accumulate `d_table += (y/t)ᵀ · d_out`; only rows of sources that
    /// flagged a sample in the batch receive gradient.
    pub fn backward(
        &self,
        labels: &LabelMatrix,
        d_out: &Matrix<T>,
        d_table: &mut Matrix<T>,
    ) -> Result<()> {
        if d_out.rows() != labels.rows() || d_out.cols() != self.dim() {
            return Err(Error::DimMismatch {
                context: "embedding backward shape",
                expected: self.dim(),
                actual: d_out.cols(),
            });
        }
        let t = self.sources();
        let inv_t = T::one() / cast::<T>(t as f64);
        for j in 0..labels.rows() {
            let up = d_out.row(j);
            for i in 0..t {
                if labels.is_present(j, i) && labels.value(j, i) == 1 {
                    for (g, &u) in d_table.row_mut(i).iter_mut().zip(up) {
                        *g = *g + u * inv_t;
                    }
                }
            }
        }
        Ok(())
    }
}
