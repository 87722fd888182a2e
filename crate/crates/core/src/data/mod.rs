//! Dataset container, deterministic splitting, and standardization.

mod csv;
mod synthetic;

pub use csv::{load_csv, save_csv};
pub use synthetic::{make_synthetic, make_synthetic_tagged, save_with_spec, SyntheticSpec, NORMAL_MODE};

use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;
use crate::scalar::{cast, to_f64, Scalar};

use rand::seq::SliceRandom;

/// A tabular anomaly-detection dataset: features, optional ground truth, and
/// `t` noisy-label sources with per-source weights.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub features: Matrix<T>,
    pub ground_truth: Option<Vec<u8>>,
    pub weak: LabelMatrix,
    pub source_weights: Vec<f64>,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        features: Matrix<T>,
        ground_truth: Option<Vec<u8>>,
        weak: LabelMatrix,
        name: impl Into<String>,
    ) -> Result<Self> {
        let n = features.rows();
        if let Some(gt) = &ground_truth {
            if gt.len() != n {
                return Err(Error::DimMismatch {
                    context: "dataset ground truth length",
                    expected: n,
                    actual: gt.len(),
                });
            }
            if gt.iter().any(|&y| y > 1) {
                return Err(Error::config("ground truth must be binary"));
            }
        }
        if weak.sources() > 0 && weak.rows() != n {
            return Err(Error::DimMismatch {
                context: "dataset weak label rows",
                expected: n,
                actual: weak.rows(),
            });
        }
        weak.validate_binary()?;
        let source_weights = vec![1.0; weak.sources()];
        Ok(Dataset {
            features,
            ground_truth,
            weak,
            source_weights,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_sources(&self) -> usize {
        self.weak.sources()
    }

    /// Replace the weak labels (noise synthesis fills these in).
    pub fn set_weak(&mut self, weak: LabelMatrix) -> Result<()> {
        if weak.rows() != self.len() {
            return Err(Error::DimMismatch {
                context: "set_weak rows",
                expected: self.len(),
                actual: weak.rows(),
            });
        }
        weak.validate_binary()?;
        self.source_weights = vec![1.0; weak.sources()];
        self.weak = weak;
        Ok(())
    }

    /// Owned row subset, used to assemble minibatches and eval sets.
    pub fn gather(&self, idx: &[usize]) -> Batch<T> {
        Batch {
            features: self.features.gather_rows(idx),
            weak: self.weak.gather_rows(idx),
            source_weights: self.source_weights.clone(),
            ground_truth: self
                .ground_truth
                .as_ref()
                .map(|gt| idx.iter().map(|&i| gt[i]).collect()),
        }
    }

    /// View of the dataset with a single weak source.
    pub fn with_single_source(&self, source: usize) -> Result<Dataset<T>> {
        if source >= self.num_sources() {
            return Err(Error::config(format!(
                "source index {source} out of range (t={})",
                self.num_sources()
            )));
        }
        Ok(Dataset {
            features: self.features.clone(),
            ground_truth: self.ground_truth.clone(),
            weak: self.weak.select_source(source),
            source_weights: vec![self.source_weights[source]],
            name: format!("{}#src{}", self.name, source),
        })
    }

    /// Replace all weak sources with one column (majority vote, ground
    /// truth, ...), keeping weight 1.
    pub fn with_label_column(&self, column: Vec<u8>, suffix: &str) -> Result<Dataset<T>> {
        if column.len() != self.len() {
            return Err(Error::DimMismatch {
                context: "with_label_column length",
                expected: self.len(),
                actual: column.len(),
            });
        }
        Ok(Dataset {
            features: self.features.clone(),
            ground_truth: self.ground_truth.clone(),
            weak: LabelMatrix::from_columns(&[column]),
            source_weights: vec![1.0],
            name: format!("{}#{}", self.name, suffix),
        })
    }
}

/// Row subset of a dataset, in batch order.
#[derive(Clone, Debug)]
pub struct Batch<T> {
    pub features: Matrix<T>,
    pub weak: LabelMatrix,
    pub source_weights: Vec<f64>,
    pub ground_truth: Option<Vec<u8>>,
}

impl<T> Batch<T> {
    pub fn len(&self) -> usize {
        self.weak.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Disjoint train/validation/test indices covering all rows exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle, then contiguous cuts at ⌊0.70n⌋ and ⌊0.95n⌋:
/// 70% train, 25% test, 5% validation.
pub fn split_70_25_5(n: usize, seed: u64) -> Result<Split> {
    if n < 20 {
        return Err(Error::config(format!(
            "split needs at least 20 rows, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let train_end = (n as f64 * 0.70).floor() as usize;
    let test_end = (n as f64 * 0.95).floor() as usize;
    Ok(Split {
        train: idx[..train_end].to_vec(),
        test: idx[train_end..test_end].to_vec(),
        val: idx[test_end..].to_vec(),
        seed,
    })
}

/// Stratified variant: both classes are split 70/25/5 independently, so a
/// small validation slice of a heavily imbalanced set still sees both
/// classes. Enable when the plain split leaves the validation set
/// single-class.
pub fn split_70_25_5_stratified(labels: &[u8], seed: u64) -> Result<Split> {
    let n = labels.len();
    if n < 20 {
        return Err(Error::config(format!(
            "split needs at least 20 rows, got {n}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let c = idx.len();
        let train_end = (c as f64 * 0.70).floor() as usize;
        let test_end = (c as f64 * 0.95).floor() as usize;
        train.extend_from_slice(&idx[..train_end]);
        test.extend_from_slice(&idx[train_end..test_end]);
        val.extend_from_slice(&idx[test_end..]);
    }
    Ok(Split {
        train,
        val,
        test,
        seed,
    })
}

/// Per-feature z-scoring parameters, fitted on train rows only.
///
/// Features whose raw standard deviation falls at or below the 1e-8 floor
/// are treated as constant and transform to exactly zero.
#[derive(Clone, Debug)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub const STD_FLOOR: f64 = 1e-8;

impl Standardizer {
    pub fn fit<T: Scalar>(dataset: &Dataset<T>, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyBatch {
                context: "Standardizer::fit",
            });
        }
        let d = dataset.dim();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for &r in rows {
            for (m, &x) in means.iter_mut().zip(dataset.features.row(r)) {
                *m += to_f64(x);
            }
        }
        means.iter_mut().for_each(|m| *m /= n);

        let mut stds = vec![0.0; d];
        for &r in rows {
            for c in 0..d {
                let diff = to_f64(dataset.features.get(r, c)) - means[c];
                stds[c] += diff * diff;
            }
        }
        stds.iter_mut().for_each(|v| *v = (*v / n).sqrt());
        Ok(Standardizer { means, stds })
    }

    pub fn apply<T: Scalar>(&self, dataset: &mut Dataset<T>) {
        let d = dataset.dim();
        assert_eq!(self.means.len(), d, "standardizer dimension");
        for r in 0..dataset.len() {
            let row = dataset.features.row_mut(r);
            for c in 0..d {
                if self.stds[c] <= STD_FLOOR {
                    row[c] = T::zero();
                } else {
                    row[c] = cast((to_f64(row[c]) - self.means[c]) / self.stds[c]);
                }
            }
        }
    }
}

/// Fit on `train_rows`, transform the whole dataset in place.
pub fn standardize<T: Scalar>(dataset: &mut Dataset<T>, train_rows: &[usize]) -> Result<Standardizer> {
    let s = Standardizer::fit(dataset, train_rows)?;
    s.apply(dataset);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn toy(n: usize, d: usize) -> Dataset<f64> {
        let features = Matrix::from_fn(n, d, |r, c| (r * d + c) as f64 * 0.1);
        let gt: Vec<u8> = (0..n).map(|i| (i % 5 == 0) as u8).collect();
        Dataset::new(features, Some(gt), LabelMatrix::empty(n), "toy").unwrap()
    }

    #[test]
    fn split_sizes_are_70_25_5() {
        let s = split_70_25_5(10_000, 1).unwrap();
        assert_eq!(s.train.len(), 7_000);
        assert_eq!(s.test.len(), 2_500);
        assert_eq!(s.val.len(), 500);
    }

    #[test]
    fn split_is_deterministic_and_a_partition() {
        let a = split_70_25_5(501, 9).unwrap();
        let b = split_70_25_5(501, 9).unwrap();
        assert_eq!(a, b);

        // set-algebra oracle: disjoint union covers everything exactly once
        let mut all = BTreeSet::new();
        for part in [&a.train, &a.val, &a.test] {
            for &i in part {
                assert!(all.insert(i), "duplicate index {i}");
            }
        }
        assert_eq!(all.len(), 501);
        assert_eq!(*all.iter().next_back().unwrap(), 500);
    }

    #[test]
    fn split_rejects_tiny_n() {
        assert!(split_70_25_5(19, 0).is_err());
    }

    #[test]
    fn stratified_split_keeps_both_classes_in_val() {
        let mut labels = vec![0u8; 400];
        for l in labels.iter_mut().take(20) {
            *l = 1;
        }
        let s = split_70_25_5_stratified(&labels, 3).unwrap();
        assert!(s.val.iter().any(|&i| labels[i] == 1));
        assert!(s.val.iter().any(|&i| labels[i] == 0));
        let total = s.train.len() + s.val.len() + s.test.len();
        assert_eq!(total, 400);
    }

    #[test]
    fn standardize_zeroes_train_mean_but_not_val_mean() {
        let mut ds = toy(100, 3);
        let train: Vec<usize> = (0..70).collect();
        let val: Vec<usize> = (70..100).collect();
        standardize(&mut ds, &train).unwrap();

        for c in 0..3 {
            let tm: f64 = train.iter().map(|&r| ds.features.get(r, c)).sum::<f64>() / 70.0;
            assert!(tm.abs() < 1e-10, "train mean {tm}");
            let vm: f64 = val.iter().map(|&r| ds.features.get(r, c)).sum::<f64>() / 30.0;
            assert!(vm.abs() > 1e-3, "val mean should be shifted, got {vm}");
        }
    }

    #[test]
    fn constant_feature_transforms_to_exact_zeros() {
        let features = Matrix::from_fn(30, 2, |r, c| if c == 0 { 0.1 } else { r as f64 });
        let mut ds =
            Dataset::new(features, None, LabelMatrix::empty(30), "const").unwrap();
        let rows: Vec<usize> = (0..30).collect();
        standardize(&mut ds, &rows).unwrap();
        for r in 0..30 {
            assert_eq!(ds.features.get(r, 0), 0.0);
        }
    }
}
