//! Weak-label generators: deliberately small classifiers whose imperfect
//! predictions become noisy labels.
//!
//! Four kinds with different inductive biases (linear, axis-aligned splits,
//! bagging, boosting) so the resulting label sources make complementary
//! errors. Internals run in f64 regardless of the dataset scalar; every
//! generator is fitted at construction, so prediction on an unfitted model
//! is unrepresentable.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::{to_f64, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GeneratorKind {
    LogisticRegression,
    DecisionTree { max_depth: usize },
    RandomForest { n_trees: usize, max_depth: usize },
    BoostedStumps { rounds: usize },
}

impl GeneratorKind {
    /// The four-kind lineup used when synthesizing t=4 sources.
    pub fn default_lineup() -> Vec<GeneratorKind> {
        vec![
            GeneratorKind::LogisticRegression,
            GeneratorKind::DecisionTree { max_depth: 3 },
            GeneratorKind::RandomForest {
                n_trees: 20,
                max_depth: 4,
            },
            GeneratorKind::BoostedStumps { rounds: 30 },
        ]
    }
}

/// A fitted weak generator. Scores are in [0, 1]; labels threshold at 0.5.
#[derive(Clone, Debug)]
pub struct WeakGenerator<T> {
    pub kind: GeneratorKind,
    model: Fitted,
    _marker: std::marker::PhantomData<T>,
}

#[derive(Clone, Debug)]
enum Fitted {
    Logistic(Logistic),
    Tree(Tree),
    Forest(Vec<Tree>),
    Stumps(Vec<(f64, Stump)>),
}

impl<T: Scalar> WeakGenerator<T> {
    /// Train on a seeded stratified subsample of `⌈gt_fraction·n⌉` rows.
    ///
    /// The positive stratum is a window over a random projection of the
    /// anomalies, so generators built with different seeds know different
    /// regions of anomaly space. Multi-source noisy labels are only useful
    /// when the sources complement each other; sampling every generator's
    /// anomalies uniformly would hand them all the same easy examples and
    /// collapse that diversity. At large fractions the windows overlap
    /// heavily and the sources converge, matching the intuition that
    /// plentiful supervision leaves little room for disagreement.
    pub fn fit(
        kind: GeneratorKind,
        features: &Matrix<T>,
        ground_truth: &[u8],
        gt_fraction: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let idx = subsample_indices(features, ground_truth, gt_fraction, rng)?;
        let x = to_f64_rows(features, &idx);
        let y: Vec<u8> = idx.iter().map(|&i| ground_truth[i]).collect();

        let model = match kind {
            GeneratorKind::LogisticRegression => Fitted::Logistic(Logistic::fit(&x, &y)),
            GeneratorKind::DecisionTree { max_depth } => {
                let all: Vec<usize> = (0..x.len()).collect();
                let feats: Vec<usize> = (0..x[0].len()).collect();
                Fitted::Tree(Tree::fit(&x, &y, &all, &feats, max_depth))
            }
            GeneratorKind::RandomForest { n_trees, max_depth } => {
                let d = x[0].len();
                let subset = d.max(1).min((d as f64).sqrt().ceil() as usize + 1);
                let pos: Vec<usize> = (0..x.len()).filter(|&i| y[i] == 1).collect();
                let neg: Vec<usize> = (0..x.len()).filter(|&i| y[i] == 0).collect();
                let mut trees = Vec::with_capacity(n_trees);
                for _ in 0..n_trees {
                    // class-balanced bootstrap so leaf probabilities are
                    // meaningful against the 0.5 decision threshold under
                    // heavy imbalance
                    let boot: Vec<usize> = (0..x.len())
                        .map(|i| {
                            let pool = if i % 2 == 0 { &pos } else { &neg };
                            pool[(rng.random::<u64>() % pool.len() as u64) as usize]
                        })
                        .collect();
                    let mut feats: Vec<usize> = (0..d).collect();
                    feats.shuffle(rng);
                    feats.truncate(subset);
                    feats.sort_unstable();
                    trees.push(Tree::fit(&x, &y, &boot, &feats, max_depth));
                }
                Fitted::Forest(trees)
            }
            GeneratorKind::BoostedStumps { rounds } => Fitted::Stumps(boost_stumps(&x, &y, rounds)),
        };
        Ok(WeakGenerator {
            kind,
            model,
            _marker: std::marker::PhantomData,
        })
    }

    /// Anomaly score per row, in [0, 1].
    pub fn predict_scores(&self, features: &Matrix<T>) -> Result<Vec<f64>> {
        let mut scores = Vec::with_capacity(features.rows());
        for r in 0..features.rows() {
            let row: Vec<f64> = features.row(r).iter().map(|&v| to_f64(v)).collect();
            scores.push(match &self.model {
                Fitted::Logistic(m) => m.score(&row),
                Fitted::Tree(t) => t.score(&row),
                Fitted::Forest(trees) => {
                    trees.iter().map(|t| t.score(&row)).sum::<f64>() / trees.len() as f64
                }
                Fitted::Stumps(stumps) => {
                    let margin: f64 = stumps.iter().map(|(a, s)| a * s.predict(&row)).sum();
                    1.0 / (1.0 + (-2.0 * margin).exp())
                }
            });
        }
        Ok(scores)
    }

    /// Scores thresholded at 0.5.
    pub fn predict_labels(&self, features: &Matrix<T>) -> Result<Vec<u8>> {
        Ok(self
            .predict_scores(features)?
            .iter()
            .map(|&s| (s >= 0.5) as u8)
            .collect())
    }
}

/// Stratified subsample of `⌈gt_fraction·n⌉` row indices; both classes must
/// be present (up to 10 attempts before giving up).
///
/// Negatives are drawn uniformly. Positives come from a contiguous window
/// over a seeded random projection of the positive rows (wrapping), which
/// keeps the class proportions intact while giving each seed a different
/// slice of anomaly space — see [`WeakGenerator::fit`].
pub fn subsample_indices<T: Scalar>(
    features: &Matrix<T>,
    ground_truth: &[u8],
    gt_fraction: f64,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    let n = ground_truth.len();
    let target = (gt_fraction * n as f64).ceil() as usize;
    if target < 20 {
        return Err(Error::config(format!(
            "gt_fraction·n must be at least 20 (got {target})"
        )));
    }

    let pos: Vec<usize> = (0..n).filter(|&i| ground_truth[i] == 1).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| ground_truth[i] == 0).collect();

    for _ in 0..10 {
        // positives ordered along a random direction, window start seeded
        let mut pos = pos.clone();
        if !pos.is_empty() {
            let d = features.cols();
            let direction: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let project = |row: usize| -> f64 {
                features
                    .row(row)
                    .iter()
                    .zip(&direction)
                    .map(|(&x, w)| x.to_f64().unwrap() * w)
                    .sum()
            };
            pos.sort_by(|&a, &b| project(a).partial_cmp(&project(b)).unwrap());
        }
        let mut neg = neg.clone();
        neg.shuffle(rng);

        // proportional allocation, at least one of each class when available
        let mut n_pos = ((target as f64) * (pos.len() as f64) / (n as f64)).round() as usize;
        n_pos = n_pos.clamp(usize::from(!pos.is_empty()), pos.len().min(target - 1).max(1));
        let n_neg = (target - n_pos).min(neg.len());

        let mut idx: Vec<usize> = if pos.is_empty() {
            Vec::new()
        } else {
            let start = (rng.random::<u64>() % pos.len() as u64) as usize;
            (0..n_pos.min(pos.len()))
                .map(|o| pos[(start + o) % pos.len()])
                .collect()
        };
        idx.extend_from_slice(&neg[..n_neg]);
        idx.sort_unstable();
        idx.dedup();

        let has_pos = idx.iter().any(|&i| ground_truth[i] == 1);
        let has_neg = idx.iter().any(|&i| ground_truth[i] == 0);
        if has_pos && has_neg {
            return Ok(idx);
        }
    }
    Err(Error::config(
        "generator subsample stayed single-class after 10 attempts",
    ))
}

fn to_f64_rows<T: Scalar>(features: &Matrix<T>, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&r| features.row(r).iter().map(|&v| to_f64(v)).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// logistic regression (full-batch gradient descent on standardized features)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Logistic {
    weights: Vec<f64>,
    bias: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Logistic {
    fn fit(x: &[Vec<f64>], y: &[u8]) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut means = vec![0.0; d];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut stds = vec![0.0; d];
        for row in x {
            for (s, (v, m)) in stds.iter_mut().zip(row.iter().zip(&means)) {
                *s += (v - m) * (v - m);
            }
        }
        stds.iter_mut()
            .for_each(|s| *s = (*s / n as f64).sqrt().max(1e-8));

        let std_row = |row: &[f64], c: usize| (row[c] - means[c]) / stds[c];

        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        let lr = 0.5;
        for _ in 0..200 {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let mut z = bias;
                for c in 0..d {
                    z += weights[c] * std_row(row, c);
                }
                let p = 1.0 / (1.0 + (-z).exp());
                let err = p - label as f64;
                for c in 0..d {
                    gw[c] += err * std_row(row, c);
                }
                gb += err;
            }
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= lr * g / n as f64;
            }
            bias -= lr * gb / n as f64;
        }
        Logistic {
            weights,
            bias,
            means,
            stds,
        }
    }

    fn score(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for c in 0..row.len() {
            z += self.weights[c] * (row[c] - self.means[c]) / self.stds[c];
        }
        1.0 / (1.0 + (-z).exp())
    }
}

// ---------------------------------------------------------------------------
// CART decision tree (gini impurity, axis-aligned splits)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Tree {
    Leaf {
        prob: f64,
    },
    Node {
        feature: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

impl Tree {
    fn fit(x: &[Vec<f64>], y: &[u8], rows: &[usize], features: &[usize], depth: usize) -> Tree {
        let n = rows.len();
        let n_pos = rows.iter().filter(|&&i| y[i] == 1).count();
        let prob = n_pos as f64 / n.max(1) as f64;
        if depth == 0 || n < 4 || n_pos == 0 || n_pos == n {
            return Tree::Leaf { prob };
        }

        let Some((feature, threshold)) = best_split(x, y, rows, features) else {
            return Tree::Leaf { prob };
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x[i][feature] <= threshold);
        if left_rows.is_empty() || right_rows.is_empty() {
            return Tree::Leaf { prob };
        }
        Tree::Node {
            feature,
            threshold,
            left: Box::new(Tree::fit(x, y, &left_rows, features, depth - 1)),
            right: Box::new(Tree::fit(x, y, &right_rows, features, depth - 1)),
        }
    }

    fn score(&self, row: &[f64]) -> f64 {
        match self {
            Tree::Leaf { prob } => *prob,
            Tree::Node {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.score(row)
                } else {
                    right.score(row)
                }
            }
        }
    }
}

/// Best (feature, threshold) by gini decrease; deterministic tie-break on
/// scan order.
fn best_split(x: &[Vec<f64>], y: &[u8], rows: &[usize], features: &[usize]) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let total_pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
    let mut best: Option<(f64, usize, f64)> = None;

    for &f in features {
        let mut vals: Vec<(f64, u8)> = rows.iter().map(|&i| (x[i][f], y[i])).collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left_n = 0.0;
        let mut left_pos = 0.0;
        for w in 0..vals.len() - 1 {
            left_n += 1.0;
            left_pos += vals[w].1 as f64;
            if vals[w].0 == vals[w + 1].0 {
                continue;
            }
            let right_n = n - left_n;
            let right_pos = total_pos - left_pos;
            let gini = |cnt: f64, pos: f64| {
                let p = pos / cnt;
                2.0 * p * (1.0 - p)
            };
            let score = (left_n / n) * gini(left_n, left_pos) + (right_n / n) * gini(right_n, right_pos);
            if best.map_or(true, |(b, _, _)| score < b - 1e-15) {
                best = Some((score, f, 0.5 * (vals[w].0 + vals[w + 1].0)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

// ---------------------------------------------------------------------------
// AdaBoost over depth-1 stumps
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Stump {
    feature: usize,
    threshold: f64,
    /// +1: predict anomaly above the threshold; −1: below.
    polarity: f64,
}

impl Stump {
    fn predict(&self, row: &[f64]) -> f64 {
        if row[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

fn boost_stumps(x: &[Vec<f64>], y: &[u8], rounds: usize) -> Vec<(f64, Stump)> {
    let n = x.len();
    let d = x[0].len();
    let y_signed: Vec<f64> = y.iter().map(|&v| 2.0 * v as f64 - 1.0).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut out = Vec::new();

    for _ in 0..rounds {
        // weighted best stump
        let mut best: Option<(f64, Stump)> = None;
        for f in 0..d {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap());
            // err(+1 polarity, threshold after position i) =
            //   W(pos on left) + W(neg on right)
            let total_pos_w: f64 = (0..n).filter(|&i| y[i] == 1).map(|i| w[i]).sum();
            let total_neg_w: f64 = 1.0 - total_pos_w;
            let mut left_pos = 0.0;
            let mut left_neg = 0.0;
            for c in 0..n - 1 {
                let i = order[c];
                if y[i] == 1 {
                    left_pos += w[i];
                } else {
                    left_neg += w[i];
                }
                if x[order[c]][f] == x[order[c + 1]][f] {
                    continue;
                }
                let err_up = left_pos + (total_neg_w - left_neg);
                let threshold = 0.5 * (x[order[c]][f] + x[order[c + 1]][f]);
                let (err, polarity) = if err_up <= 0.5 {
                    (err_up, 1.0)
                } else {
                    (1.0 - err_up, -1.0)
                };
                if best.as_ref().map_or(true, |(b, _)| err < *b - 1e-15) {
                    best = Some((
                        err,
                        Stump {
                            feature: f,
                            threshold,
                            polarity,
                        },
                    ));
                }
            }
        }

        let Some((err, stump)) = best else { break };
        if err <= 1e-12 {
            out.push((6.0, stump)); // effectively a perfect separator
            break;
        }
        if err >= 0.5 {
            break;
        }
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        for i in 0..n {
            w[i] *= (-alpha * y_signed[i] * stump.predict(&x[i])).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= z);
        out.push((alpha, stump));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic, SyntheticSpec};
    use crate::data::Dataset;
    use crate::metrics::roc_auc;
    use crate::rng::rng_from_seed;

    fn separable() -> Dataset<f64> {
        make_synthetic(&SyntheticSpec::new(600, 8, 0.15, 0.0, 10))
        .unwrap()
    }

    #[test]
    fn subsample_is_deterministic_and_stratified() {
        let gt: Vec<u8> = (0..500).map(|i| (i % 10 == 0) as u8).collect();
        let features = Matrix::from_fn(500, 3, |r, c| ((r * 3 + c) as f64).sin());
        let a = subsample_indices(&features, &gt, 0.1, &mut rng_from_seed(5)).unwrap();
        let b = subsample_indices(&features, &gt, 0.1, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().any(|&i| gt[i] == 1));
        assert!(a.iter().any(|&i| gt[i] == 0));
    }

    #[test]
    fn subsample_rejects_tiny_targets_and_single_class() {
        let gt = vec![0u8; 100];
        let features = Matrix::from_fn(100, 2, |r, _| r as f64);
        assert!(subsample_indices(&features, &gt, 0.1, &mut rng_from_seed(1)).is_err()); // 10 < 20
        let gt = vec![0u8; 1000];
        let features = Matrix::from_fn(1000, 2, |r, _| r as f64);
        assert!(subsample_indices(&features, &gt, 0.05, &mut rng_from_seed(1)).is_err()); // single-class
    }

    #[test]
    fn tree_fits_separable_data_well() {
        let ds = separable();
        let gt = ds.ground_truth.as_ref().unwrap();
        let g: WeakGenerator<f64> = WeakGenerator::fit(
            GeneratorKind::DecisionTree { max_depth: 3 },
            &ds.features,
            gt,
            1.0,
            &mut rng_from_seed(2),
        )
        .unwrap();
        let labels = g.predict_labels(&ds.features).unwrap();
        let correct = labels.iter().zip(gt).filter(|(a, b)| a == b).count();
        assert!(
            correct as f64 / gt.len() as f64 >= 0.95,
            "accuracy {}",
            correct as f64 / gt.len() as f64
        );
    }

    #[test]
    fn perfect_generator_has_high_column_quality() {
        let ds = separable();
        let gt = ds.ground_truth.as_ref().unwrap();
        for kind in GeneratorKind::default_lineup() {
            let g: WeakGenerator<f64> =
                WeakGenerator::fit(kind, &ds.features, gt, 1.0, &mut rng_from_seed(3)).unwrap();
            let labels = g.predict_labels(&ds.features).unwrap();
            let scores: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
            let auc = roc_auc(&scores, gt).unwrap();
            assert!(auc >= 0.95, "{kind:?}: column AUC {auc}");
        }
    }

    #[test]
    fn fixed_seed_gives_identical_generators() {
        let ds = separable();
        let gt = ds.ground_truth.as_ref().unwrap();
        let kind = GeneratorKind::RandomForest {
            n_trees: 10,
            max_depth: 3,
        };
        let a: WeakGenerator<f64> =
            WeakGenerator::fit(kind, &ds.features, gt, 0.3, &mut rng_from_seed(4)).unwrap();
        let b: WeakGenerator<f64> =
            WeakGenerator::fit(kind, &ds.features, gt, 0.3, &mut rng_from_seed(4)).unwrap();
        assert_eq!(
            a.predict_labels(&ds.features).unwrap(),
            b.predict_labels(&ds.features).unwrap()
        );
    }

    #[test]
    fn different_kinds_disagree_somewhere() {
        let ds = make_synthetic(&SyntheticSpec::new(800, 8, 0.15, 0.7, 11))
        .unwrap();
        let gt = ds.ground_truth.as_ref().unwrap();
        let a: WeakGenerator<f64> = WeakGenerator::fit(
            GeneratorKind::LogisticRegression,
            &ds.features,
            gt,
            0.1,
            &mut rng_from_seed(6),
        )
        .unwrap();
        let b: WeakGenerator<f64> = WeakGenerator::fit(
            GeneratorKind::DecisionTree { max_depth: 4 },
            &ds.features,
            gt,
            0.1,
            &mut rng_from_seed(6),
        )
        .unwrap();
        let la = a.predict_labels(&ds.features).unwrap();
        let lb = b.predict_labels(&ds.features).unwrap();
        let disagreements = la.iter().zip(&lb).filter(|(x, y)| x != y).count();
        assert!(disagreements > 0);
    }

    #[test]
    fn duplicate_generators_produce_identical_columns() {
        let ds = separable();
        let gt = ds.ground_truth.as_ref().unwrap();
        let kind = GeneratorKind::BoostedStumps { rounds: 10 };
        let g: WeakGenerator<f64> =
            WeakGenerator::fit(kind, &ds.features, gt, 0.5, &mut rng_from_seed(8)).unwrap();
        let twin = g.clone();
        let labels = crate::noise::generate_inaccurate_labels(&[g, twin], &ds.features).unwrap();
        assert_eq!(labels.column(0), labels.column(1));
    }
}
