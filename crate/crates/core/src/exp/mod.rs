//! Experiment orchestration.
//!
//! Experiment A freezes the filter, computes every feature map once and
//! trains only the dense head. Experiment B trains filter angles and head
//! together with hybrid gradients. Both count every circuit execution.

mod cache;
mod compare;
mod config;
mod metrics;
mod runner;

pub use cache::{feature_cache_key, precompute_features, FeatureCache};
pub use compare::{check_comparable, compare_models, compare_models_with, Comparison, ComparisonRow};
pub use config::{
    ExperimentConfig, GradMode, DEFAULT_FD_STEP, DEFAULT_LEARNING_RATE, DEFAULT_SEED,
    FROZEN_BATCH, FROZEN_EPOCHS, TRAINABLE_BATCH, TRAINABLE_EPOCHS,
};
pub use metrics::{metrics_csv, running_average, timings_csv, MetricsRecord};
pub use runner::{
    dataset_dir, derive_seed, load_experiment_data, run_experiment, run_experiment_a,
    run_experiment_a_with, run_experiment_b, run_experiment_b_with, run_experiment_with,
    ExperimentData, ExperimentReport, RunSummary,
};
