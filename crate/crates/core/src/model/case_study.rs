//! Per-expert specialization breakdown.
//!
//! Partitions evaluation samples by the expert the gate activates most
//! strongly, then scores every expert on every partition by forcing it for
//! all samples. A specialized layer shows its diagonal (each partition
//! scored by its own expert) dominating the row.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::scalar::Scalar;

use super::AdmoeModel;

#[derive(Clone, Debug)]
pub struct CaseStudyReport {
    /// `table[p][e]` = ROC-AUC on partition p with expert e forced; `None`
    /// when the partition is empty or single-class.
    pub table: Vec<Vec<Option<f64>>>,
    pub partition_sizes: Vec<usize>,
}

impl CaseStudyReport {
    /// Rows where the diagonal is the row maximum, over rows that have a
    /// defined diagonal entry.
    pub fn diagonal_wins(&self) -> (usize, usize) {
        let mut wins = 0;
        let mut rows = 0;
        for (p, row) in self.table.iter().enumerate() {
            let Some(diag) = row[p] else { continue };
            rows += 1;
            let best = row
                .iter()
                .flatten()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if diag >= best - 1e-12 {
                wins += 1;
            }
        }
        (wins, rows)
    }
}

/// Build the m×m forced-expert table over `rows` (typically the test split).
pub fn expert_case_study<T: Scalar>(
    model: &AdmoeModel<T>,
    dataset: &Dataset<T>,
    rows: &[usize],
) -> Result<CaseStudyReport> {
    if !model.config.use_moe {
        return Err(Error::config("expert_case_study requires a MoE model"));
    }
    let gt = dataset
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::config("expert_case_study needs ground truth"))?;
    if rows.is_empty() {
        return Err(Error::EmptyBatch {
            context: "expert_case_study",
        });
    }

    let m = model.config.num_experts;
    let batch = dataset.gather(rows);
    let labels: Vec<u8> = rows.iter().map(|&i| gt[i]).collect();

    // partition by strongest activated expert
    let decision = model.decide(&batch.features, &batch.weak)?;
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); m];
    for j in 0..rows.len() {
        partitions[decision.argmax_expert(j)].push(j);
    }

    // forced scores, one pass per expert over the whole batch
    let mut forced: Vec<Vec<T>> = Vec::with_capacity(m);
    for e in 0..m {
        forced.push(model.forward_forced_expert(&batch.features, &batch.weak, e)?);
    }

    let mut table = vec![vec![None; m]; m];
    for (p, members) in partitions.iter().enumerate() {
        for e in 0..m {
            let scores: Vec<T> = members.iter().map(|&j| forced[e][j]).collect();
            let part_labels: Vec<u8> = members.iter().map(|&j| labels[j]).collect();
            table[p][e] = roc_auc(&scores, &part_labels).ok();
        }
    }

    Ok(CaseStudyReport {
        table,
        partition_sizes: partitions.iter().map(|p| p.len()).collect(),
    })
}
