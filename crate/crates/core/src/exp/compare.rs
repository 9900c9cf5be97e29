use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qfilter::generate_spec;

use super::config::ExperimentConfig;
use super::runner::{load_experiment_data, run_experiment_with, ExperimentData, ExperimentReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub dataset: String,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub running_time_seconds: f64,
    pub executions_per_image: u64,
    pub executions_total: u64,
    pub circuit_sha256: String,
    /// Relative to the first row.
    pub time_ratio: f64,
    pub execution_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub reports: Vec<ExperimentReport>,
}

impl Comparison {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "method,dataset,test_accuracy,test_loss,running_time_seconds,executions_per_image,executions_total,time_ratio,execution_ratio,circuit_sha256\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.3},{},{},{:.4},{:.4},{}\n",
                r.method,
                r.dataset,
                r.test_accuracy,
                r.test_loss,
                r.running_time_seconds,
                r.executions_per_image,
                r.executions_total,
                r.time_ratio,
                r.execution_ratio,
                r.circuit_sha256
            ));
        }
        out
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<14} {:>9} {:>9} {:>12} {:>10} {:>9} {:>9}",
            "Method", "Dataset", "Test acc", "Test loss", "Running time", "Exec/img", "Time x", "Exec x"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<12} {:<14} {:>8.2}% {:>9.4} {:>11.3}s {:>10} {:>9.3} {:>9.3}",
                r.method,
                r.dataset,
                100.0 * r.test_accuracy,
                r.test_loss,
                r.running_time_seconds,
                r.executions_per_image,
                r.time_ratio,
                r.execution_ratio
            )?;
        }
        if let Some(r) = self.rows.first() {
            write!(f, "circuit {}", &r.circuit_sha256[..16])?;
        }
        Ok(())
    }
}

/// Checks that `configs` can be compared: at least two, one dataset, one
/// circuit architecture, one subset.
pub fn check_comparable(configs: &[ExperimentConfig]) -> Result<()> {
    let first = configs
        .first()
        .filter(|_| configs.len() >= 2)
        .ok_or_else(|| Error::Config("comparison needs at least two configurations".into()))?;
    let digest = generate_spec(first.circuit_seed, &first.generator())?.digest();
    for c in &configs[1..] {
        if c.dataset != first.dataset {
            return Err(Error::Config(format!(
                "cannot compare runs on {} and {}",
                first.dataset, c.dataset
            )));
        }
        if c.data_dir != first.data_dir
            || c.train_per_class != first.train_per_class
            || c.test_per_class != first.test_per_class
            || c.subset_seed() != first.subset_seed()
        {
            return Err(Error::Config("compared runs must share one data subset".into()));
        }
        if generate_spec(c.circuit_seed, &c.generator())?.digest() != digest {
            return Err(Error::Config(
                "compared runs must share the circuit architecture (circuit seed, kernel, layers)"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Runs every config on one shared data subset and tabulates the results.
pub fn compare_models(configs: &[ExperimentConfig]) -> Result<Comparison> {
    check_comparable(configs)?;
    let data = load_experiment_data(&configs[0])?;
    compare_models_with(configs, &data)
}

pub fn compare_models_with(configs: &[ExperimentConfig], data: &ExperimentData) -> Result<Comparison> {
    check_comparable(configs)?;
    let reports = configs
        .iter()
        .map(|c| run_experiment_with(c, data))
        .collect::<Result<Vec<_>>>()?;
    let base = &reports[0].summary;
    let rows = reports
        .iter()
        .map(|r| {
            let s = &r.summary;
            ComparisonRow {
                method: s.method.clone(),
                dataset: s.dataset.clone(),
                test_accuracy: s.test_accuracy,
                test_loss: s.test_loss,
                running_time_seconds: s.running_time_seconds,
                executions_per_image: s.executions_per_image,
                executions_total: s.executions_total,
                circuit_sha256: s.circuit_sha256.clone(),
                time_ratio: s.running_time_seconds / base.running_time_seconds,
                execution_ratio: s.executions_total as f64 / base.executions_total as f64,
            }
        })
        .collect();
    Ok(Comparison { rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetId;
    use crate::exp::runner::tests::toy_experiment;

    #[test]
    fn three_dilations_share_a_circuit() {
        let (base, data) = toy_experiment(false);
        let configs: Vec<_> = [1, 2, 3]
            .into_iter()
            .map(|r| {
                let mut c = base.clone();
                c.geometry.dilation = r;
                c.epochs = Some(1);
                c
            })
            .collect();
        let cmp = compare_models_with(&configs, &data).unwrap();
        assert_eq!(cmp.rows.len(), 3);
        let names: Vec<_> = cmp.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["QCNN", "QDCNN_r2", "QDCNN_r3"]);
        assert!(cmp.rows.iter().all(|r| r.circuit_sha256 == cmp.rows[0].circuit_sha256));
        // 6×6 images: r=1 → 3×3 cells, r=2 and r=3 → 2×2
        let per: Vec<_> = cmp.rows.iter().map(|r| r.executions_per_image).collect();
        assert_eq!(per, [9, 4, 4]);
        assert_eq!(cmp.rows[1].execution_ratio, 4.0 / 9.0);
        assert!(cmp.to_string().contains("QDCNN_r3"));
        assert_eq!(cmp.csv().lines().count(), 4);
    }

    #[test]
    fn mismatches_are_config_errors() {
        let a = ExperimentConfig::default();
        assert!(matches!(check_comparable(std::slice::from_ref(&a)), Err(Error::Config(_))));
        let mut b = a.clone();
        b.dataset = DatasetId::FashionMnist;
        assert!(matches!(check_comparable(&[a.clone(), b]), Err(Error::Config(_))));
        let mut c = a.clone();
        c.circuit_seed += 1;
        assert!(matches!(check_comparable(&[a.clone(), c]), Err(Error::Config(_))));
        let mut d = a.clone();
        d.geometry.dilation = 3;
        assert!(check_comparable(&[a, d]).is_ok());
    }
}
