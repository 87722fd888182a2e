//! Case-study knob sweep on the frozen benchmark data.

use admoe_core::data::{make_synthetic, split_70_25_5, standardize, SyntheticSpec};
use admoe_core::model::{expert_case_study, fit, test_auc, AdmoeModel, ModelConfig, TrainConfig};
use admoe_core::noise::{apply_noise, NoiseSpec};
use admoe_core::rng::derive_seed;
use admoe_core::Dataset64;

const BENCH_SEED: u64 = 20_240_808;

fn bench() -> (Dataset64, admoe_core::data::Split) {
    let spec = SyntheticSpec::new(8000, 16, 0.05, 0.55, BENCH_SEED);
    let mut ds: Dataset64 = make_synthetic(&spec).unwrap();
    apply_noise(&mut ds, &NoiseSpec::inaccurate(0.05, derive_seed(BENCH_SEED, 7))).unwrap();
    let split = split_70_25_5(ds.len(), derive_seed(BENCH_SEED, 99)).unwrap();
    standardize(&mut ds, &split.train).unwrap();
    (ds, split)
}

#[test]
#[ignore]
fn sweep_case_study() {
    let (ds, split) = bench();
    for (train_k, epochs, alpha, stream) in [
        (2usize, 25usize, 0.01, 1u64),
        (2, 25, 0.01, 3),
        (2, 40, 0.01, 3),
        (2, 25, 0.05, 3),
        (1, 25, 0.01, 3),
    ] {
        let mut passes = 0;
        let mut detail = String::new();
        for seed in 0..4u64 {
            let mut model = AdmoeModel::new(
                ModelConfig {
                    top_k: train_k,
                    ..ModelConfig::admoe(16, 4)
                },
                derive_seed(seed, stream),
            )
            .unwrap();
            let cfg = TrainConfig {
                epochs,
                alpha,
                seed,
                ..TrainConfig::default()
            };
            fit(&mut model, &ds, &split, &cfg).unwrap();
            let report = expert_case_study(&model, &ds, &split.test).unwrap();
            let (wins, rows) = report.diagonal_wins();
            if 2 * wins > rows {
                passes += 1;
            }
            detail.push_str(&format!(" s{seed}:{wins}/{rows}"));
            if seed == 0 {
                for (p, row) in report.table.iter().enumerate() {
                    let pretty: Vec<String> = row
                        .iter()
                        .map(|x| x.map(|v| format!("{v:.3}")).unwrap_or("--".into()))
                        .collect();
                    eprintln!("   [k={train_k} a={alpha} st={stream}] p{p} (n={}): {pretty:?}", report.partition_sizes[p]);
                }
            }
        }
        eprintln!("train_k {train_k} epochs {epochs} alpha {alpha} stream {stream}:{detail} -> {passes}/4 seeds");
        let _ = test_auc(&AdmoeModel::new(ModelConfig::admoe(16, 4), 0).unwrap(), &ds, &split.test);
    }
}
