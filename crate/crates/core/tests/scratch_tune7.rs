//! Loss-mode comparison at the frozen benchmark data.

use admoe_core::data::{make_synthetic, split_70_25_5, standardize, SyntheticSpec};
use admoe_core::model::{
    expert_case_study, fit, test_auc, AdmoeModel, LossMode, ModelConfig, TrainConfig,
};
use admoe_core::noise::{apply_noise, NoiseSpec};
use admoe_core::rng::derive_seed;
use admoe_core::Dataset64;

const BENCH_SEED: u64 = 20_240_808;

fn bench(conflict: f64) -> (Dataset64, admoe_core::data::Split) {
    let spec = SyntheticSpec::new(8000, 16, 0.05, 0.55, BENCH_SEED).with_conflict(conflict);
    let mut ds: Dataset64 = make_synthetic(&spec).unwrap();
    apply_noise(&mut ds, &NoiseSpec::inaccurate(0.05, derive_seed(BENCH_SEED, 7))).unwrap();
    let split = split_70_25_5(ds.len(), derive_seed(BENCH_SEED, 99)).unwrap();
    standardize(&mut ds, &split.train).unwrap();
    (ds, split)
}

#[test]
#[ignore]
fn loss_modes() {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for conflict in [0.0, 2.3] {
        let (ds, split) = bench(conflict);
        for mode in [LossMode::CombineAll, LossMode::SampleOne] {
            let cfg = |seed| TrainConfig {
                epochs: 25,
                seed,
                loss_mode: mode,
                ..TrainConfig::default()
            };
            let mut a_auc = vec![];
            let mut m_auc = vec![];
            let mut case = String::new();
            let mut case_pass = 0;
            for seed in 0..4u64 {
                let mut a = AdmoeModel::new(ModelConfig::admoe(16, 4), seed).unwrap();
                fit(&mut a, &ds, &split, &cfg(seed)).unwrap();
                a_auc.push(test_auc(&a, &ds, &split.test).unwrap());
                let report = expert_case_study(&a, &ds, &split.test).unwrap();
                let (wins, rows) = report.diagonal_wins();
                if 2 * wins > rows {
                    case_pass += 1;
                }
                case.push_str(&format!(" {wins}/{rows}"));

                let mut ml = AdmoeModel::new(
                    ModelConfig {
                        use_moe: false,
                        labels_as_input: true,
                        ..ModelConfig::admoe(16, 4)
                    },
                    seed,
                )
                .unwrap();
                fit(&mut ml, &ds, &split, &cfg(seed)).unwrap();
                m_auc.push(test_auc(&ml, &ds, &split.test).unwrap());
            }
            eprintln!(
                "conflict {conflict} {mode:?}: admoe {:.4} mlp {:.4} (margin {:+.4}) case{case} -> {case_pass}/4",
                mean(&a_auc),
                mean(&m_auc),
                mean(&a_auc) - mean(&m_auc),
            );
        }
    }
}
