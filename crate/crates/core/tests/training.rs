//! Small end-to-end runs on synthetic data.

use qdcnn::data::{DatasetSplit, Provenance};
use qdcnn::exp::{run_experiment_a_with, run_experiment_b_with, ExperimentConfig, ExperimentData};

/// 8×8 images; class `c` lights row `c % 8` (and column `c / 8` for 8, 9).
fn synthetic(per_class: usize, seed: u8) -> DatasetSplit {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for k in 0..per_class * 10 {
        let c = k % 10;
        for p in 0..64 {
            let (row, col) = (p / 8, p % 8);
            let on = if c < 8 { row == c } else { col == 2 * c - 15 };
            let noise = ((p * 31 + k * 17 + seed as usize) % 23) as u8;
            pixels.push(if on { 200 + noise } else { noise });
        }
        labels.push(c as u8);
    }
    DatasetSplit::from_raw(8, 8, pixels, labels, Provenance {
        images_sha256: format!("synthetic-{seed}"),
        labels_sha256: format!("synthetic-{seed}"),
        subset_seed: None,
        per_class: None,
    })
    .unwrap()
}

fn setup(trainable: bool, epochs: usize) -> (ExperimentConfig, ExperimentData) {
    let mut cfg = if trainable {
        ExperimentConfig::experiment_b()
    } else {
        ExperimentConfig::experiment_a()
    };
    cfg.train_per_class = 5;
    cfg.test_per_class = 2;
    cfg.epochs = Some(epochs);
    // stride 2 with r = 2 never reads odd rows, where half the bars are
    cfg.geometry.dilation = 1;
    let data = ExperimentData::from_splits(&cfg, &synthetic(6, 1), &synthetic(3, 2)).unwrap();
    assert_eq!(data.train.len(), 50);
    (cfg, data)
}

#[test]
fn frozen_filter_head_fits_fifty_samples() {
    let (mut cfg, data) = setup(false, 40);
    cfg.batch_size = Some(5);
    let r = run_experiment_a_with(&cfg, &data).unwrap();
    let first = r.records[0].train_loss;
    let last = r.records.last().unwrap().train_loss;
    assert!(last < 0.5 * first, "{first} → {last}");
    assert!(r.records.last().unwrap().test_accuracy >= 0.5);
}

#[test]
fn trainable_filter_reduces_loss() {
    let (cfg, data) = setup(true, 4);
    let r = run_experiment_b_with(&cfg, &data).unwrap();
    let first = r.records[0].train_loss;
    let last = r.records.last().unwrap().train_loss;
    assert!(last < first, "{first} → {last}");
    let e: Vec<u64> = r.records.iter().map(|m| m.executions).collect();
    assert!(e.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(r.summary.step_accounting_exact, Some(true));
}

#[test]
fn shot_readout_is_reproducible() {
    let (mut cfg, data) = setup(false, 2);
    cfg.shots = 200;
    let a = run_experiment_a_with(&cfg, &data).unwrap();
    let b = run_experiment_a_with(&cfg, &data).unwrap();
    assert_eq!(a.metrics_csv(), b.metrics_csv());
    cfg.shots = 0;
    let exact = run_experiment_a_with(&cfg, &data).unwrap();
    assert_ne!(a.metrics_csv(), exact.metrics_csv());
}
