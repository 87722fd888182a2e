//! Clean-label integration: a small set of trusted labels joins the model as
//! one more label source, carrying a higher loss weight and an absence mask
//! on the rows where it was never observed.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Append ground truth on `clean_indices` as source `t` with weight
/// `clean_weight`; every other row is marked absent for that source and
/// contributes nothing to its loss.
///
/// Returns `false` (no-op) when `clean_indices` is empty; callers should
/// surface that as a warning.
pub fn append_clean_labels<T: Scalar>(
    dataset: &mut Dataset<T>,
    clean_indices: &[usize],
    clean_weight: f64,
) -> Result<bool> {
    if clean_indices.is_empty() {
        return Ok(false);
    }
    if clean_weight < 1.0 {
        return Err(Error::config(format!(
            "clean_weight must be >= 1, got {clean_weight}"
        )));
    }
    let gt = dataset
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::config("append_clean_labels needs ground truth"))?
        .clone();

    let n = dataset.len();
    let mut present = vec![false; n];
    for &i in clean_indices {
        if i >= n {
            return Err(Error::config(format!(
                "clean index {i} out of range (n={n})"
            )));
        }
        present[i] = true;
    }

    let column: Vec<u8> = (0..n).map(|i| if present[i] { gt[i] } else { 0 }).collect();
    dataset.weak.push_masked_source(&column, &present);
    dataset.source_weights.push(clean_weight);
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelMatrix;
    use crate::matrix::Matrix;

    fn toy() -> Dataset<f64> {
        let features = Matrix::from_fn(6, 2, |r, c| (r + c) as f64);
        let gt = vec![1, 0, 1, 0, 0, 1];
        let weak = LabelMatrix::from_columns(&[vec![1, 1, 0, 0, 0, 1]]);
        Dataset::new(features, Some(gt), weak, "toy").unwrap()
    }

    #[test]
    fn empty_indices_is_a_noop() {
        let mut ds = toy();
        let before = ds.weak.clone();
        assert!(!append_clean_labels(&mut ds, &[], 5.0).unwrap());
        assert_eq!(ds.weak, before);
        assert_eq!(ds.num_sources(), 1);
    }

    #[test]
    fn appends_masked_source_with_weight() {
        let mut ds = toy();
        assert!(append_clean_labels(&mut ds, &[0, 2], 5.0).unwrap());
        assert_eq!(ds.num_sources(), 2);
        assert_eq!(ds.source_weights, vec![1.0, 5.0]);
        assert!(ds.weak.is_present(0, 1));
        assert!(!ds.weak.is_present(1, 1));
        assert_eq!(ds.weak.value(0, 1), 1); // ground truth on clean rows
        assert_eq!(ds.weak.column(1), vec![1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn out_of_range_or_low_weight_errors() {
        let mut ds = toy();
        assert!(append_clean_labels(&mut ds, &[99], 5.0).is_err());
        assert!(append_clean_labels(&mut ds, &[0], 0.5).is_err());
    }
}
