use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One row of a run's learning curve. Epoch 0 is measured before any update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub wall_seconds: f64,
    /// Cumulative circuit executions up to the end of this epoch.
    pub executions: u64,
}

/// The deterministic columns only: `epoch,train_loss,test_loss,test_accuracy,executions`.
/// Floats use Rust's shortest round-trip formatting, so equal values give
/// equal bytes.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from("epoch,train_loss,test_loss,test_accuracy,executions\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.train_loss, r.test_loss, r.test_accuracy, r.executions
        );
    }
    out
}

/// Wall-clock per epoch: `epoch,wall_seconds`.
pub fn timings_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from("epoch,wall_seconds\n");
    for r in records {
        let _ = writeln!(out, "{},{:.6}", r.epoch, r.wall_seconds);
    }
    out
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Mean of each window of `width` consecutive values.
pub fn running_average(values: &[f64], width: usize) -> Vec<f64> {
    if width == 0 {
        return Vec::new();
    }
    values
        .windows(width)
        .map(|w| w.iter().sum::<f64>() / width as f64)
        .collect()
}
