//! Grid over (conflict, difficulty): criterion-5 margins and criterion-7
//! diagonal wins measured together.

use admoe_core::baselines::{train_label_vote, train_single_noisy};
use admoe_core::data::{make_synthetic, split_70_25_5, standardize, SyntheticSpec};
use admoe_core::model::{expert_case_study, fit, test_auc, AdmoeModel, ModelConfig, TrainConfig};
use admoe_core::noise::{apply_noise, NoiseSpec};
use admoe_core::rng::derive_seed;
use admoe_core::Dataset64;

const BENCH_SEED: u64 = 20_240_808;

fn bench(difficulty: f64, conflict: f64, gt: f64) -> (Dataset64, admoe_core::data::Split, Vec<f64>) {
    let spec = SyntheticSpec::new(8000, 16, 0.05, difficulty, BENCH_SEED).with_conflict(conflict);
    let mut ds: Dataset64 = make_synthetic(&spec).unwrap();
    let q = apply_noise(&mut ds, &NoiseSpec::inaccurate(gt, derive_seed(BENCH_SEED, 7))).unwrap();
    let split = split_70_25_5(ds.len(), derive_seed(BENCH_SEED, 99)).unwrap();
    standardize(&mut ds, &split.train).unwrap();
    (ds, split, q)
}

fn cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 25,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
#[ignore]
fn grid() {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for difficulty in [0.55, 0.65] {
        for conflict in [0.0, 1.2, 1.8, 2.3] {
            let (ds, split, q) = bench(difficulty, conflict, 0.05);
            let mut a_auc = vec![];
            let mut s_auc = vec![];
            let mut v_auc = vec![];
            let mut m_auc = vec![];
            let mut case_pass = 0;
            let mut case_detail = String::new();
            for seed in 0..4u64 {
                let mut a =
                    AdmoeModel::new(ModelConfig::admoe(16, 4), derive_seed(seed, 1)).unwrap();
                fit(&mut a, &ds, &split, &cfg(seed)).unwrap();
                a_auc.push(test_auc(&a, &ds, &split.test).unwrap());

                // case study on the benchmark model itself (top-1 analysis)
                let report = expert_case_study(&a, &ds, &split.test).unwrap();
                let (wins, rows) = report.diagonal_wins();
                if 2 * wins > rows {
                    case_pass += 1;
                }
                case_detail.push_str(&format!(" {wins}/{rows}"));

                let (sn, _) =
                    train_single_noisy(&ds, &split, (seed % 4) as usize, &cfg(seed)).unwrap();
                s_auc.push(test_auc(&sn, &ds, &split.test).unwrap());
                let (lv, _) = train_label_vote(&ds, &split, &cfg(seed)).unwrap();
                v_auc.push(test_auc(&lv, &ds, &split.test).unwrap());
                let mut ml = AdmoeModel::new(
                    ModelConfig {
                        use_moe: false,
                        labels_as_input: true,
                        ..ModelConfig::admoe(16, 4)
                    },
                    derive_seed(seed, 2),
                )
                .unwrap();
                fit(&mut ml, &ds, &split, &cfg(seed)).unwrap();
                m_auc.push(test_auc(&ml, &ds, &split.test).unwrap());
            }
            eprintln!(
                "diff {difficulty} conflict {conflict}: q {:.2?} | admoe {:.4} single {:.4} (gap {:+.3}) vote {:.4} ({:+.3}) mlp {:.4} ({:+.3}) | case{} -> {case_pass}/4",
                q,
                mean(&a_auc),
                mean(&s_auc),
                mean(&a_auc) - mean(&s_auc),
                mean(&v_auc),
                mean(&a_auc) - mean(&v_auc),
                mean(&m_auc),
                mean(&a_auc) - mean(&m_auc),
                case_detail
            );
        }
    }
}
