//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::conv::ConvGeometry;
use crate::error::{Error, Result};
use crate::exp::{self, ExperimentConfig};
use crate::qfilter::{generate_spec, gradient_cost, CircuitSpec, GradMethod};

#[derive(Debug, Parser)]
#[command(name = "qdcnn", version, about = "Quantum dilated convolution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment (A when --trainable false, B when true).
    Run(RunArgs),
    /// Run one experiment per dilation rate on a shared subset and circuit.
    Compare(CompareArgs),
    /// Output size, receptive field and circuit cost per dilation rate.
    Dims(DimsArgs),
    /// Print a circuit spec, generated from a seed or read from a file.
    InspectSpec(InspectArgs),
}

/// Experiment settings. Every flag is also a config-file key; precedence is
/// flags, then `--config`, then built-in defaults.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Key-value config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// mnist or fashion-mnist [default: mnist]
    #[arg(long)]
    pub dataset: Option<String>,
    /// Directory with the IDX files, or with one sub-directory per dataset.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Square kernel side [default: 2]
    #[arg(long)]
    pub kernel: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Zero padding [default: 0]
    #[arg(long)]
    pub padding: Option<usize>,
    /// Dilation rate r [default: 2]
    #[arg(long)]
    pub dilation: Option<usize>,
    /// Seed of the random circuit architecture [default: 42]
    #[arg(long)]
    pub circuit_seed: Option<u64>,
    /// Random layers [default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Rotations per layer [default: 4]
    #[arg(long)]
    pub params_per_layer: Option<usize>,
    /// cnot or crz [default: cnot]
    #[arg(long)]
    pub entangler: Option<String>,
    /// Hadamard before the encoding rotations [default: false]
    #[arg(long, value_name = "BOOL")]
    pub hadamard: Option<bool>,
    /// Train the filter angles [default: false]
    #[arg(long, value_name = "BOOL")]
    pub trainable: Option<bool>,
    /// [default: 30 frozen, 20 trainable]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32 frozen, 4 trainable]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 100]
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    pub test_per_class: Option<usize>,
    /// Global seed for angles, head init and shuffling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the balanced subset [default: --seed]
    #[arg(long)]
    pub subset_seed: Option<u64>,
    /// Measurement shots, 0 for exact expectations [default: 0]
    #[arg(long)]
    pub shots: Option<u32>,
    /// shift or finitediff [default: shift]
    #[arg(long)]
    pub grad: Option<String>,
    /// Finite-difference step [default: 1e-4]
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Output directory for run artifacts and the feature cache.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Reuse cached feature maps [default: true]
    #[arg(long, value_name = "BOOL")]
    pub cache: Option<bool>,
}

impl ConfigArgs {
    /// Flags given on the command line as config key-value pairs.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        let s = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        put("dataset", self.dataset.clone());
        put("data-dir", s(&self.data_dir));
        put("kernel", self.kernel.map(|v| v.to_string()));
        put("stride", self.stride.map(|v| v.to_string()));
        put("padding", self.padding.map(|v| v.to_string()));
        put("dilation", self.dilation.map(|v| v.to_string()));
        put("circuit-seed", self.circuit_seed.map(|v| v.to_string()));
        put("layers", self.layers.map(|v| v.to_string()));
        put("params-per-layer", self.params_per_layer.map(|v| v.to_string()));
        put("entangler", self.entangler.clone());
        put("hadamard", self.hadamard.map(|v| v.to_string()));
        put("trainable", self.trainable.map(|v| v.to_string()));
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("batch-size", self.batch_size.map(|v| v.to_string()));
        put("lr", self.lr.map(|v| v.to_string()));
        put("train-per-class", self.train_per_class.map(|v| v.to_string()));
        put("test-per-class", self.test_per_class.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("subset-seed", self.subset_seed.map(|v| v.to_string()));
        put("shots", self.shots.map(|v| v.to_string()));
        put("grad", self.grad.clone());
        put("fd-step", self.fd_step.map(|v| v.to_string()));
        put("output", s(&self.output));
        put("cache", self.cache.map(|v| v.to_string()));
        out
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.pairs() {
            cfg.set(k, &v).map_err(|e| Error::Usage(format!("--{k}: {e}")))?;
        }
        cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Dilation rates to compare; overrides --dilation.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub dilations: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    /// Image side (rows).
    #[arg(long, default_value_t = 28)]
    pub size: usize,
    /// Image columns when not square.
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub kernel: usize,
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub padding: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub dilations: Vec<usize>,
    /// Trainable parameters, for the per-step training cost column.
    #[arg(long, default_value_t = 8)]
    pub params: u64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Read this spec file instead of generating one.
    #[arg(long, value_name = "FILE")]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = exp::DEFAULT_SEED)]
    pub circuit_seed: u64,
    #[arg(long, default_value_t = 2)]
    pub kernel: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 4)]
    pub params_per_layer: usize,
    #[arg(long, default_value = "cnot")]
    pub entangler: String,
    #[arg(long, default_value_t = false, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub hadamard: bool,
    /// Also write the spec to this file.
    #[arg(long, value_name = "FILE")]
    pub write: Option<PathBuf>,
}

fn usage(e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Usage(m),
        other => other,
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.config.resolve()?;
    if cfg.data_dir.is_none() {
        return Err(Error::Usage("missing dataset path: pass --data-dir <DIR>".into()));
    }
    let report = exp::run_experiment(&cfg)?;
    let w = |e: std::io::Error| Error::io("writing output", e);
    writeln!(out, "epoch  train_loss  test_loss  test_acc  executions").map_err(w)?;
    for r in &report.records {
        writeln!(
            out,
            "{:>5}  {:>10.4}  {:>9.4}  {:>7.2}%  {:>10}",
            r.epoch,
            r.train_loss,
            r.test_loss,
            100.0 * r.test_accuracy,
            r.executions
        )
        .map_err(w)?;
    }
    writeln!(out, "{}", report.summary.table_row()).map_err(w)?;
    if let Some(dir) = &cfg.output {
        writeln!(out, "artifacts: {}", dir.join(report.run_name()).display()).map_err(w)?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let base = args.config.resolve()?;
    if base.data_dir.is_none() {
        return Err(Error::Usage("missing dataset path: pass --data-dir <DIR>".into()));
    }
    let configs: Vec<_> = args
        .dilations
        .iter()
        .map(|&r| {
            let mut c = base.clone();
            c.geometry.dilation = r;
            c.validate().map_err(usage).map(|_| c)
        })
        .collect::<Result<_>>()?;
    exp::check_comparable(&configs).map_err(usage)?;
    let cmp = exp::compare_models(&configs)?;
    let w = |e: std::io::Error| Error::io("writing output", e);
    writeln!(out, "{cmp}").map_err(w)?;
    if let Some(dir) = &base.output {
        let path = dir.join(format!("comparison_{}.csv", base.dataset));
        std::fs::write(&path, cmp.csv()).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        writeln!(out, "table: {}", path.display()).map_err(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimsRow {
    pub dilation: usize,
    pub out_rows: usize,
    pub out_cols: usize,
    pub field_rows: usize,
    pub field_cols: usize,
    /// Forward circuits per image.
    pub executions: u64,
    /// Circuits per image per training step, `cells · (1 + 2p)`.
    pub step_executions: u64,
}

pub fn dims_rows(args: &DimsArgs) -> Result<Vec<DimsRow>> {
    let cols = args.cols.unwrap_or(args.size);
    args.dilations
        .iter()
        .map(|&r| {
            let g = ConvGeometry::square(args.kernel, args.stride, args.padding, r)?;
            let (ow, oh) = g.output_dims(args.size, cols)?;
            let (fw, fh) = g.receptive_field();
            let cells = (ow * oh) as u64;
            Ok(DimsRow {
                dilation: r,
                out_rows: ow,
                out_cols: oh,
                field_rows: fw,
                field_cols: fh,
                executions: cells,
                step_executions: cells * (1 + 2 * args.params),
            })
        })
        .collect()
}

fn cmd_dims(args: &DimsArgs, out: &mut dyn Write) -> Result<()> {
    let rows = dims_rows(args)?;
    let w = |e: std::io::Error| Error::io("writing output", e);
    writeln!(out, "r  o_w  o_h  receptive  exec/image  exec/train-step/image").map_err(w)?;
    for d in rows {
        writeln!(
            out,
            "{}  {:>3}  {:>3}  {:>9}  {:>10}  {:>21}",
            d.dilation,
            d.out_rows,
            d.out_cols,
            format!("{}x{}", d.field_rows, d.field_cols),
            d.executions,
            d.step_executions
        )
        .map_err(w)?;
    }
    Ok(())
}

fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let spec = match &args.file {
        Some(path) => CircuitSpec::load(path)?,
        None => {
            let cfg = crate::qfilter::GeneratorConfig {
                n_qubits: args.kernel * args.kernel,
                n_layers: args.layers,
                params_per_layer: args.params_per_layer,
                entangler: args.entangler.parse().map_err(usage)?,
                hadamard_encoder: args.hadamard,
            };
            generate_spec(args.circuit_seed, &cfg).map_err(usage)?
        }
    };
    let w = |e: std::io::Error| Error::io("writing output", e);
    write!(out, "{}", spec.to_text()).map_err(w)?;
    writeln!(out, "# sha256 {}", spec.digest()).map_err(w)?;
    writeln!(
        out,
        "# gradient executions per patch {}",
        gradient_cost(&spec, GradMethod::ParameterShift)
    )
    .map_err(w)?;
    if let Some(path) = &args.write {
        spec.save(path)?;
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Dims(a) => cmd_dims(a, out),
        Command::InspectSpec(a) => cmd_inspect(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e @ Error::Usage(_)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
