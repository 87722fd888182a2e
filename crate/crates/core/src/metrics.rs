//! Ranking metrics for anomaly scores.
//!
//! ROC-AUC uses the rank-sum (Mann–Whitney) form with half credit for tied
//! scores, computed by one sort. Average precision walks descending-score
//! prefixes; ties keep their stable input order, so with heavily tied scores
//! AP depends on that order — callers ranking binary columns should prefer
//! ROC-AUC, which is tie-exact.

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Scalar};

/// Evaluation summary for one score vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub roc_auc: f64,
    pub average_precision: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn evaluate<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<MetricsReport> {
    let (n_pos, n_neg) = class_counts(labels);
    Ok(MetricsReport {
        roc_auc: roc_auc(scores, labels)?,
        average_precision: average_precision(scores, labels)?,
        n_pos,
        n_neg,
    })
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    (n_pos, labels.len() - n_pos)
}

/// Probability that a random positive outranks a random negative, ties
/// counted half. `O(n log n)` via average ranks.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "roc_auc labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            context: "roc_auc",
            n_pos,
            n_neg,
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // average ranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Area under the precision-recall curve via descending-score prefixes:
/// `AP = Σ_k (R_k − R_{k−1}) · P_k`.
///
/// Tied scores keep their stable input order.
pub fn average_precision<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "average_precision labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 {
        return Err(Error::SingleClass {
            context: "average_precision",
            n_pos,
            n_neg,
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut ap = 0.0;
    let mut tp = 0usize;
    for (k, &idx) in order.iter().enumerate() {
        if labels[idx] == 1 {
            tp += 1;
            let precision = tp as f64 / (k + 1) as f64;
            ap += precision / n_pos as f64;
        }
    }
    Ok(ap)
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Brute-force oracles, exposed for the test suites. Quadratic in n; kept
/// deliberately naive and separate from the production paths above.
pub mod oracle {
    use super::*;

    /// All positive/negative pairs, half credit on ties.
    pub fn roc_auc_pair_count<T: Scalar>(scores: &[T], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            if yi != 1 {
                continue;
            }
            for (j, &yj) in labels.iter().enumerate() {
                if yj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    /// Prefix scan over the explicitly sorted list.
    pub fn average_precision_prefix<T: Scalar>(scores: &[T], labels: &[u8]) -> f64 {
        let mut items: Vec<(f64, u8, usize)> = scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (s, &y))| (to_f64(*s), y, i))
            .collect();
        // descending score, stable in input order
        items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.2.cmp(&b.2)));
        let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        let mut tp = 0.0;
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        for (k, item) in items.iter().enumerate() {
            if item.1 == 1 {
                tp += 1.0;
            }
            let recall = tp / n_pos;
            let precision = tp / (k + 1) as f64;
            if item.1 == 1 {
                ap += (recall - prev_recall) * precision;
            }
            prev_recall = recall;
        }
        ap
    }
}
