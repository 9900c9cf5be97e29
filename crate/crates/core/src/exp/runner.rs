use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conv::FeatureTensor;
use crate::data::{balanced_subset, load_dir, DatasetSplit, Provenance};
use crate::error::{Error, Result};
use crate::model::{argmax, hybrid_grad, AdamState, Checkpoint, DenseHead, N_CLASSES};
use crate::qfilter::{
    gradient_cost, generate_spec, CircuitSpec, Executor, GradMethod, QuantumFilter,
};

use super::cache::{feature_cache_key, precompute_features, FeatureCache};
use super::config::ExperimentConfig;
use super::metrics::{metrics_csv, timings_csv, write_file, MetricsRecord};

/// Independent seed streams derived from the global seed.
pub(crate) mod streams {
    pub const THETA: u64 = 1;
    pub const HEAD: u64 = 2;
    pub const SHUFFLE: u64 = 3;
}

/// splitmix64 of `seed + stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Balanced train and test subsets.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: DatasetSplit,
    pub test: DatasetSplit,
}

impl ExperimentData {
    /// Subsets full splits as `config` asks.
    pub fn from_splits(config: &ExperimentConfig, train: &DatasetSplit, test: &DatasetSplit) -> Result<Self> {
        Ok(ExperimentData {
            train: balanced_subset(train, config.train_per_class, config.subset_seed())?,
            test: balanced_subset(test, config.test_per_class, config.subset_seed())?,
        })
    }
}

/// Directory holding the IDX files of `config.dataset`: either
/// `<data-dir>/<dataset-name>` or `<data-dir>` itself.
pub fn dataset_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let root = config
        .data_dir
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset directory given (set --data-dir)".into()))?;
    let nested = root.join(config.dataset.name());
    if nested.join("train-images-idx3-ubyte").exists() {
        Ok(nested)
    } else {
        Ok(root.clone())
    }
}

pub fn load_experiment_data(config: &ExperimentConfig) -> Result<ExperimentData> {
    let (train, test) = load_dir(&dataset_dir(config)?)?;
    ExperimentData::from_splits(config, &train, &test)
}

/// Final numbers of a run, in the shape of a results-table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub dataset: String,
    pub trainable: bool,
    pub dilation: usize,
    pub test_accuracy: f64,
    pub test_loss: f64,
    /// Full pipeline wall-clock: quantum phase plus training and evaluation.
    pub running_time_seconds: f64,
    /// Wall-clock of the feature precompute (Experiment A only).
    pub quantum_seconds: Option<f64>,
    pub output_cells: usize,
    /// Forward-pass circuits per image.
    pub executions_per_image: u64,
    /// Circuits per training image per optimisation step (Experiment B only).
    pub executions_per_step_image: Option<u64>,
    /// Circuit executions the reported metrics account for.
    pub executions_total: u64,
    /// Executions actually simulated by this process; lower than the total
    /// when features came from the cache.
    pub executions_performed: u64,
    pub feature_cache_hit: bool,
    /// Every optimisation step cost exactly `batch · executions_per_step_image`.
    pub step_accounting_exact: Option<bool>,
    pub circuit_sha256: String,
    pub n_train: usize,
    pub n_test: usize,
    pub train_provenance: Provenance,
    pub test_provenance: Provenance,
}

impl RunSummary {
    /// `method | test acc | test loss | running time`.
    pub fn table_row(&self) -> String {
        format!(
            "{} | {:.2}% | {:.4} | {:.3}s",
            self.method,
            100.0 * self.test_accuracy,
            self.test_loss,
            self.running_time_seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub spec: CircuitSpec,
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
    pub checkpoint: Checkpoint,
}

impl ExperimentReport {
    pub fn metrics_csv(&self) -> String {
        metrics_csv(&self.records)
    }

    /// Run directory name: `<dataset>_<method>_<frozen|trainable>`.
    pub fn run_name(&self) -> String {
        format!(
            "{}_{}_{}",
            self.config.dataset,
            self.summary.method,
            if self.config.trainable { "trainable" } else { "frozen" }
        )
    }

    /// Writes `metrics.csv`, `timings.csv`, `summary.json`, `circuit.qc`,
    /// `config.txt` and `checkpoint.qdcm` into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        write_file(&dir.join("metrics.csv"), metrics_csv(&self.records))?;
        write_file(&dir.join("timings.csv"), timings_csv(&self.records))?;
        let json = serde_json::json!({
            "summary": self.summary,
            "config": self.config,
            "geometry": {
                "kernel": self.config.geometry.kernel_m,
                "stride": self.config.geometry.stride,
                "padding": self.config.geometry.padding,
                "dilation": self.config.geometry.dilation,
            },
        });
        let text = serde_json::to_string_pretty(&json)
            .map_err(|e| Error::Model(format!("serialising summary: {e}")))?;
        write_file(&dir.join("summary.json"), text + "\n")?;
        self.spec.save(&dir.join("circuit.qc"))?;
        write_file(&dir.join("config.txt"), self.config.to_text())?;
        self.checkpoint.save(&dir.join("checkpoint.qdcm"))
    }
}

struct Setup {
    spec: CircuitSpec,
    filter: QuantumFilter,
    cells: usize,
    head: DenseHead,
}

fn setup(config: &ExperimentConfig, data: &ExperimentData) -> Result<Setup> {
    config.validate()?;
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::Config("train and test subsets must be non-empty".into()));
    }
    if (data.train.rows(), data.train.cols()) != (data.test.rows(), data.test.cols()) {
        return Err(Error::Config("train and test images differ in size".into()));
    }
    let spec = generate_spec(config.circuit_seed, &config.generator())?;
    let filter = QuantumFilter::with_random_theta(
        spec.clone(),
        derive_seed(config.seed, streams::THETA),
        config.trainable,
    )?;
    let (ow, oh) = config
        .geometry
        .output_dims(data.train.rows(), data.train.cols())
        .map_err(|e| Error::Config(e.to_string()))?;
    let cells = ow * oh;
    let head = DenseHead::glorot(
        cells * filter.n_channels(),
        N_CLASSES,
        derive_seed(config.seed, streams::HEAD),
    );
    Ok(Setup {
        spec,
        filter,
        cells,
        head,
    })
}

/// Mean cross-entropy and top-1 accuracy.
fn evaluate(head: &DenseHead, features: &[FeatureTensor], split: &DatasetSplit) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (i, f) in features.iter().enumerate() {
        let label = split.label(i);
        let z = head.logits(f.values())?;
        let (_, lse) = crate::model::softmax(&z);
        loss += lse - z[label];
        if argmax(&z) == label {
            correct += 1;
        }
    }
    let n = features.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

struct HeadTrainer {
    adam_w: AdamState,
    adam_b: AdamState,
}

impl HeadTrainer {
    fn new(head: &DenseHead, lr: f64) -> Self {
        HeadTrainer {
            adam_w: AdamState::new(head.weights().len(), lr),
            adam_b: AdamState::new(head.bias().len(), lr),
        }
    }

    fn step(&mut self, head: &mut DenseHead, dw: &[f64], db: &[f64]) -> Result<()> {
        self.adam_w.step(head.weights_mut(), dw)?;
        self.adam_b.step(head.bias_mut(), db)
    }
}

fn method_mismatch(expected: bool) -> Error {
    Error::Config(if expected {
        "Experiment B needs trainable = true".into()
    } else {
        "Experiment A needs trainable = false".into()
    })
}

fn output_cache(config: &ExperimentConfig) -> Option<FeatureCache> {
    match (&config.output, config.cache) {
        (Some(dir), true) => Some(FeatureCache::new(dir.join("cache"))),
        _ => None,
    }
}

fn features_for(
    split: &DatasetSplit,
    setup: &Setup,
    config: &ExperimentConfig,
    executor: &Executor,
    cache: Option<&FeatureCache>,
) -> Result<(Vec<FeatureTensor>, bool)> {
    let key = feature_cache_key(split, &setup.filter, &config.geometry, executor.readout());
    if let Some(c) = cache {
        if let Some(t) = c.load(&key)? {
            if t.len() == split.len() {
                return Ok((t, true));
            }
        }
    }
    let t = precompute_features(split, &setup.filter, &config.geometry, executor)?;
    if let Some(c) = cache {
        c.store(&key, &t)?;
    }
    Ok((t, false))
}

/// Experiment A: frozen filter. Features are computed once (or read from
/// the cache under `<output>/cache`), then only the head is trained.
pub fn run_experiment_a(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = load_experiment_data(config)?;
    run_experiment_a_with(config, &data)
}

pub fn run_experiment_a_with(config: &ExperimentConfig, data: &ExperimentData) -> Result<ExperimentReport> {
    if config.trainable {
        return Err(method_mismatch(false));
    }
    let start = Instant::now();
    let s = setup(config, data)?;
    let executor = Executor::new(config.readout());
    let cache = output_cache(config);

    let q_start = Instant::now();
    let (train_f, hit_train) = features_for(&data.train, &s, config, &executor, cache.as_ref())?;
    let (test_f, hit_test) = features_for(&data.test, &s, config, &executor, cache.as_ref())?;
    let quantum_seconds = q_start.elapsed().as_secs_f64();
    let precompute = ((data.train.len() + data.test.len()) * s.cells) as u64;

    let mut head = s.head.clone();
    let mut trainer = HeadTrainer::new(&head, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, streams::SHUFFLE));
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs() + 1);

    let (train_loss, _) = evaluate(&head, &train_f, &data.train)?;
    let (test_loss, test_acc) = evaluate(&head, &test_f, &data.test)?;
    records.push(MetricsRecord {
        epoch: 0,
        train_loss,
        test_loss,
        test_accuracy: test_acc,
        wall_seconds: start.elapsed().as_secs_f64(),
        executions: precompute,
    });

    let n_w = head.weights().len();
    for epoch in 1..=config.epochs() {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size()) {
            let mut dw = vec![0.0; n_w];
            let mut db = vec![0.0; N_CLASSES];
            for &i in batch {
                let g = head.loss_and_grad(train_f[i].values(), data.train.label(i))?;
                epoch_loss += g.loss;
                for (a, b) in dw.iter_mut().zip(&g.d_weights) {
                    *a += b;
                }
                for (a, b) in db.iter_mut().zip(&g.d_bias) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            dw.iter_mut().chain(db.iter_mut()).for_each(|v| *v *= scale);
            trainer.step(&mut head, &dw, &db)?;
        }
        let (test_loss, test_acc) = evaluate(&head, &test_f, &data.test)?;
        records.push(MetricsRecord {
            epoch,
            train_loss: epoch_loss / data.train.len() as f64,
            test_loss,
            test_accuracy: test_acc,
            wall_seconds: start.elapsed().as_secs_f64(),
            executions: precompute,
        });
    }

    let last = records.last().expect("epoch 0 is always recorded");
    let summary = RunSummary {
        method: config.method_name(),
        dataset: config.dataset.display_name().to_string(),
        trainable: false,
        dilation: config.geometry.dilation,
        test_accuracy: last.test_accuracy,
        test_loss: last.test_loss,
        running_time_seconds: start.elapsed().as_secs_f64(),
        quantum_seconds: Some(quantum_seconds),
        output_cells: s.cells,
        executions_per_image: s.cells as u64,
        executions_per_step_image: None,
        executions_total: precompute,
        executions_performed: executor.executions(),
        feature_cache_hit: hit_train && hit_test,
        step_accounting_exact: None,
        circuit_sha256: s.spec.digest(),
        n_train: data.train.len(),
        n_test: data.test.len(),
        train_provenance: data.train.provenance().clone(),
        test_provenance: data.test.provenance().clone(),
    };
    finish(config, s.spec, s.filter, head, records, summary)
}

/// Experiment B: filter angles and head trained together. Per-sample
/// hybrid gradients run in parallel and are reduced in sample order.
pub fn run_experiment_b(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = load_experiment_data(config)?;
    run_experiment_b_with(config, &data)
}

pub fn run_experiment_b_with(config: &ExperimentConfig, data: &ExperimentData) -> Result<ExperimentReport> {
    if !config.trainable {
        return Err(method_mismatch(true));
    }
    let start = Instant::now();
    let s = setup(config, data)?;
    let executor = Executor::new(config.readout());
    let method: GradMethod = config.grad_method();
    let per_step_image = s.cells as u64 * (1 + gradient_cost(&s.spec, method));

    let mut filter = s.filter.clone();
    let mut head = s.head.clone();
    let mut trainer = HeadTrainer::new(&head, config.learning_rate);
    let mut adam_theta = AdamState::new(filter.theta().len(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, streams::SHUFFLE));
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs() + 1);
    let mut accounting_exact = true;

    let train_f = precompute_features(&data.train, &filter, &config.geometry, &executor)?;
    let (train_loss, _) = evaluate(&head, &train_f, &data.train)?;
    drop(train_f);
    let test_f = precompute_features(&data.test, &filter, &config.geometry, &executor)?;
    let (test_loss, test_acc) = evaluate(&head, &test_f, &data.test)?;
    records.push(MetricsRecord {
        epoch: 0,
        train_loss,
        test_loss,
        test_accuracy: test_acc,
        wall_seconds: start.elapsed().as_secs_f64(),
        executions: executor.executions(),
    });

    let n_w = head.weights().len();
    let n_t = filter.theta().len();
    for epoch in 1..=config.epochs() {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size()) {
            let before = executor.executions();
            let grads = batch
                .par_iter()
                .map(|&i| {
                    hybrid_grad(
                        &head,
                        &filter,
                        &data.train.image(i),
                        &config.geometry,
                        data.train.label(i),
                        &executor,
                        method,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            if executor.executions() - before != per_step_image * batch.len() as u64 {
                accounting_exact = false;
            }
            let mut dw = vec![0.0; n_w];
            let mut db = vec![0.0; N_CLASSES];
            let mut dt = vec![0.0; n_t];
            for g in &grads {
                epoch_loss += g.loss;
                for (a, b) in dw.iter_mut().zip(&g.d_weights) {
                    *a += b;
                }
                for (a, b) in db.iter_mut().zip(&g.d_bias) {
                    *a += b;
                }
                for (a, b) in dt.iter_mut().zip(&g.d_theta) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            dw.iter_mut()
                .chain(db.iter_mut())
                .chain(dt.iter_mut())
                .for_each(|v| *v *= scale);
            trainer.step(&mut head, &dw, &db)?;
            adam_theta.step(filter.theta_mut(), &dt)?;
        }
        let test_f = precompute_features(&data.test, &filter, &config.geometry, &executor)?;
        let (test_loss, test_acc) = evaluate(&head, &test_f, &data.test)?;
        records.push(MetricsRecord {
            epoch,
            train_loss: epoch_loss / data.train.len() as f64,
            test_loss,
            test_accuracy: test_acc,
            wall_seconds: start.elapsed().as_secs_f64(),
            executions: executor.executions(),
        });
    }

    let last = records.last().expect("epoch 0 is always recorded");
    let summary = RunSummary {
        method: config.method_name(),
        dataset: config.dataset.display_name().to_string(),
        trainable: true,
        dilation: config.geometry.dilation,
        test_accuracy: last.test_accuracy,
        test_loss: last.test_loss,
        running_time_seconds: start.elapsed().as_secs_f64(),
        quantum_seconds: None,
        output_cells: s.cells,
        executions_per_image: s.cells as u64,
        executions_per_step_image: Some(per_step_image),
        executions_total: executor.executions(),
        executions_performed: executor.executions(),
        feature_cache_hit: false,
        step_accounting_exact: Some(accounting_exact),
        circuit_sha256: s.spec.digest(),
        n_train: data.train.len(),
        n_test: data.test.len(),
        train_provenance: data.train.provenance().clone(),
        test_provenance: data.test.provenance().clone(),
    };
    finish(config, s.spec, filter, head, records, summary)
}

fn finish(
    config: &ExperimentConfig,
    spec: CircuitSpec,
    filter: QuantumFilter,
    head: DenseHead,
    records: Vec<MetricsRecord>,
    summary: RunSummary,
) -> Result<ExperimentReport> {
    let report = ExperimentReport {
        config: config.clone(),
        spec,
        records,
        summary,
        checkpoint: Checkpoint {
            head,
            theta: filter.theta().to_vec(),
        },
    };
    if let Some(out) = &config.output {
        report.write_artifacts(&out.join(report.run_name()))?;
    }
    Ok(report)
}

/// Runs Experiment A or B according to `config.trainable`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = load_experiment_data(config)?;
    run_experiment_with(config, &data)
}

pub fn run_experiment_with(config: &ExperimentConfig, data: &ExperimentData) -> Result<ExperimentReport> {
    if config.trainable {
        run_experiment_b_with(config, data)
    } else {
        run_experiment_a_with(config, data)
    }
}
