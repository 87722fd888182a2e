//! Deep diagnosis of the specialization case study.

use admoe_core::data::{make_synthetic_tagged, split_70_25_5, standardize, SyntheticSpec, NORMAL_MODE};
use admoe_core::metrics::roc_auc;
use admoe_core::model::{fit, AdmoeModel, ModelConfig, TrainConfig};
use admoe_core::noise::{apply_noise, NoiseSpec};
use admoe_core::rng::derive_seed;

const BENCH_SEED: u64 = 20_240_808;

#[test]
#[ignore]
fn dissect() {
    for (train_k, conflict) in [(2usize, 0.0), (1, 0.0), (2, 2.3), (1, 2.3)] {
        let spec = SyntheticSpec::new(8000, 16, 0.05, 0.55, BENCH_SEED).with_conflict(conflict);
        let (mut ds, modes) = make_synthetic_tagged::<f64>(&spec).unwrap();
        apply_noise(&mut ds, &NoiseSpec::inaccurate(0.05, derive_seed(BENCH_SEED, 7))).unwrap();
        let split = split_70_25_5(ds.len(), derive_seed(BENCH_SEED, 99)).unwrap();
        standardize(&mut ds, &split.train).unwrap();

        // which sources cover which modes? (column=1 rate per mode)
        eprintln!("=== train_k {train_k} conflict {conflict} ===");
        for s in 0..4 {
            let col = ds.weak.column(s);
            let mut rates = vec![];
            for m in [0u8, 1, 2, NORMAL_MODE] {
                let rows: Vec<usize> = (0..ds.len()).filter(|&i| modes[i] == m).collect();
                let flag: f64 = rows.iter().map(|&i| col[i] as f64).sum::<f64>() / rows.len() as f64;
                rates.push(flag);
            }
            eprintln!(
                "  source {s}: flag rates mode0 {:.2} mode1 {:.2} mode2 {:.2} normal {:.3}",
                rates[0], rates[1], rates[2], rates[3]
            );
        }

        let mut model = AdmoeModel::new(
            ModelConfig {
                top_k: train_k,
                ..ModelConfig::admoe(16, 4)
            },
            derive_seed(0, 1),
        )
        .unwrap();
        fit(
            &mut model,
            &ds,
            &split,
            &TrainConfig {
                epochs: 25,
                seed: 0,
                ..TrainConfig::default()
            },
        )
        .unwrap();

        let batch = ds.gather(&split.test);
        let decision = model.decide(&batch.features, &batch.weak).unwrap();

        // partition × mode composition
        let mut comp = vec![[0usize; 4]; 4];
        for (j, &row) in split.test.iter().enumerate() {
            let p = decision.argmax_expert(j);
            let m = if modes[row] == NORMAL_MODE { 3 } else { modes[row] as usize };
            comp[p][m] += 1;
        }
        for (p, c) in comp.iter().enumerate() {
            eprintln!("  partition {p}: mode0 {} mode1 {} mode2 {} normal {}", c[0], c[1], c[2], c[3]);
        }

        // per-mode AUC of each forced expert over the whole test set
        let gt = ds.ground_truth.as_ref().unwrap();
        for e in 0..4 {
            let forced = model
                .forward_forced_expert(&batch.features, &batch.weak, e)
                .unwrap();
            let mut line = format!("  expert {e}:");
            for m in [0u8, 1, 2] {
                let mut scores = vec![];
                let mut labels = vec![];
                for (j, &row) in split.test.iter().enumerate() {
                    if modes[row] == m {
                        scores.push(forced[j]);
                        labels.push(1u8);
                    } else if modes[row] == NORMAL_MODE {
                        scores.push(forced[j]);
                        labels.push(gt[row]);
                    }
                }
                line.push_str(&format!(" mode{m} {:.3}", roc_auc(&scores, &labels).unwrap()));
            }
            eprintln!("{line}");
        }
    }
}
