use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::conv::ConvGeometry;
use crate::data::DatasetId;
use crate::error::{Error, Result};
use crate::qfilter::{Entangler, GeneratorConfig, GradMethod, Readout};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const FROZEN_EPOCHS: usize = 30;
pub const FROZEN_BATCH: usize = 32;
pub const TRAINABLE_EPOCHS: usize = 20;
pub const TRAINABLE_BATCH: usize = 4;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GradMode {
    #[default]
    #[serde(rename = "shift")]
    Shift,
    #[serde(rename = "finitediff")]
    FiniteDiff,
}

impl FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" | "parameter-shift" => Ok(GradMode::Shift),
            "finitediff" | "finite-diff" | "fd" => Ok(GradMode::FiniteDiff),
            other => Err(Error::Config(format!(
                "unknown gradient mode `{other}` (expected shift or finitediff)"
            ))),
        }
    }
}

impl std::fmt::Display for GradMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GradMode::Shift => "shift",
            GradMode::FiniteDiff => "finitediff",
        })
    }
}

/// Everything that determines a run. `epochs` and `batch_size` fall back to
/// the frozen-filter (30 / 32) or trainable-filter (20 / 4) defaults.
///
/// The key-value file form uses one `key = value` per line, `#` comments,
/// and the keys listed in [`ExperimentConfig::KEYS`], which are also the
/// command-line flag names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    pub data_dir: Option<PathBuf>,
    #[serde(skip)]
    pub geometry: ConvGeometry,
    pub circuit_seed: u64,
    pub n_layers: usize,
    pub params_per_layer: usize,
    #[serde(serialize_with = "ser_display")]
    pub entangler: Entangler,
    pub hadamard_encoder: bool,
    pub trainable: bool,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
    pub subset_seed: Option<u64>,
    pub shots: u32,
    pub grad: GradMode,
    pub fd_step: f64,
    pub output: Option<PathBuf>,
    pub cache: bool,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetId::Mnist,
            data_dir: None,
            geometry: ConvGeometry::default().with_dilation(2),
            circuit_seed: DEFAULT_SEED,
            n_layers: 2,
            params_per_layer: 4,
            entangler: Entangler::Cnot,
            hadamard_encoder: false,
            trainable: false,
            epochs: None,
            batch_size: None,
            learning_rate: DEFAULT_LEARNING_RATE,
            train_per_class: 100,
            test_per_class: 20,
            seed: DEFAULT_SEED,
            subset_seed: None,
            shots: 0,
            grad: GradMode::Shift,
            fd_step: DEFAULT_FD_STEP,
            output: None,
            cache: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "dataset",
        "data-dir",
        "kernel",
        "stride",
        "padding",
        "dilation",
        "circuit-seed",
        "layers",
        "params-per-layer",
        "entangler",
        "hadamard",
        "trainable",
        "epochs",
        "batch-size",
        "lr",
        "train-per-class",
        "test-per-class",
        "seed",
        "subset-seed",
        "shots",
        "grad",
        "fd-step",
        "output",
        "cache",
    ];

    pub fn experiment_a() -> Self {
        ExperimentConfig::default()
    }

    pub fn experiment_b() -> Self {
        ExperimentConfig {
            trainable: true,
            ..ExperimentConfig::default()
        }
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or(if self.trainable {
            TRAINABLE_EPOCHS
        } else {
            FROZEN_EPOCHS
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size.unwrap_or(if self.trainable {
            TRAINABLE_BATCH
        } else {
            FROZEN_BATCH
        })
    }

    pub fn subset_seed(&self) -> u64 {
        self.subset_seed.unwrap_or(self.seed)
    }

    pub fn readout(&self) -> Readout {
        if self.shots == 0 {
            Readout::Analytic
        } else {
            Readout::Shots {
                shots: self.shots,
                seed: self.seed,
            }
        }
    }

    pub fn grad_method(&self) -> GradMethod {
        match self.grad {
            GradMode::Shift => GradMethod::ParameterShift,
            GradMode::FiniteDiff => GradMethod::FiniteDifference {
                step: self.fd_step,
            },
        }
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_qubits: self.geometry.kernel_len(),
            n_layers: self.n_layers,
            params_per_layer: self.params_per_layer,
            entangler: self.entangler,
            hadamard_encoder: self.hadamard_encoder,
        }
    }

    /// `QCNN` for a standard quantum convolution, `QDCNN_r<r>` otherwise.
    pub fn method_name(&self) -> String {
        if self.geometry.dilation == 1 {
            "QCNN".to_string()
        } else {
            format!("QDCNN_r{}", self.geometry.dilation)
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = value.parse()?,
            "data-dir" => self.data_dir = Some(PathBuf::from(value)),
            "kernel" => {
                let k = parse(key, value)?;
                self.geometry.kernel_m = k;
                self.geometry.kernel_n = k;
            }
            "stride" => self.geometry.stride = parse(key, value)?,
            "padding" => self.geometry.padding = parse(key, value)?,
            "dilation" => self.geometry.dilation = parse(key, value)?,
            "circuit-seed" => self.circuit_seed = parse(key, value)?,
            "layers" => self.n_layers = parse(key, value)?,
            "params-per-layer" => self.params_per_layer = parse(key, value)?,
            "entangler" => self.entangler = value.parse()?,
            "hadamard" => self.hadamard_encoder = parse_bool(key, value)?,
            "trainable" => self.trainable = parse_bool(key, value)?,
            "epochs" => self.epochs = Some(parse(key, value)?),
            "batch-size" => self.batch_size = Some(parse(key, value)?),
            "lr" => self.learning_rate = parse(key, value)?,
            "train-per-class" => self.train_per_class = parse(key, value)?,
            "test-per-class" => self.test_per_class = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "subset-seed" => self.subset_seed = Some(parse(key, value)?),
            "shots" => self.shots = parse(key, value)?,
            "grad" => self.grad = value.parse()?,
            "fd-step" => self.fd_step = parse(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "cache" => self.cache = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a key-value file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        self.apply_text(&text)
    }

    /// The fully resolved configuration in key-value form.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("dataset", self.dataset.to_string());
        if let Some(d) = &self.data_dir {
            kv("data-dir", d.display().to_string());
        }
        kv("kernel", g.kernel_m.to_string());
        kv("stride", g.stride.to_string());
        kv("padding", g.padding.to_string());
        kv("dilation", g.dilation.to_string());
        kv("circuit-seed", self.circuit_seed.to_string());
        kv("layers", self.n_layers.to_string());
        kv("params-per-layer", self.params_per_layer.to_string());
        kv("entangler", self.entangler.to_string());
        kv("hadamard", self.hadamard_encoder.to_string());
        kv("trainable", self.trainable.to_string());
        kv("epochs", self.epochs().to_string());
        kv("batch-size", self.batch_size().to_string());
        kv("lr", self.learning_rate.to_string());
        kv("train-per-class", self.train_per_class.to_string());
        kv("test-per-class", self.test_per_class.to_string());
        kv("seed", self.seed.to_string());
        kv("subset-seed", self.subset_seed().to_string());
        kv("shots", self.shots.to_string());
        kv("grad", self.grad.to_string());
        kv("fd-step", self.fd_step.to_string());
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        kv("cache", self.cache.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.geometry.kernel_m != self.geometry.kernel_n {
            return Err(Error::Config("only square kernels are configurable".into()));
        }
        if self.geometry.kernel_len() < 2 {
            return Err(Error::Config("kernel must cover at least 2 pixels".into()));
        }
        if self.epochs() == 0 || self.batch_size() == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::Config("subset sizes must be positive".into()));
        }
        if self.fd_step.is_nan() || self.fd_step <= 0.0 {
            return Err(Error::Config("fd-step must be positive".into()));
        }
        Ok(())
    }
}
