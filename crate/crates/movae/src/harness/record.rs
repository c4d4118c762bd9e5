use crate::generalize::TracePoint;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Outcome of one repeat of a protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_accuracy: Option<f64>,
    /// Per-iteration evaluation trace (self-training runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

/// Deterministic result of one experiment run: per-repeat outcomes plus
/// aggregates recomputable from them. Wall-clock timings live next to the
/// record in [`RunOutput`], not inside it, so records from identical
/// (config, seed) runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub protocol: String,
    pub metric: String,
    pub seed: u64,
    pub repeats: usize,
    pub per_repeat: Vec<RepeatResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation over repeats (0 when repeats = 1).
    pub stddev_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_mean_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_stddev_accuracy: Option<f64>,
}

pub(crate) fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricsRecord {
    pub fn from_repeats(
        protocol: &str,
        metric: &str,
        seed: u64,
        per_repeat: Vec<RepeatResult>,
    ) -> Result<Self> {
        if per_repeat.is_empty() {
            return Err(Error::Argument("a record needs at least one repeat".into()));
        }
        let accuracies: Vec<f64> = per_repeat.iter().map(|r| r.accuracy).collect();
        let (mean_accuracy, stddev_accuracy) = mean_and_stddev(&accuracies);
        let knn: Vec<f64> = per_repeat.iter().filter_map(|r| r.knn_accuracy).collect();
        let (knn_mean_accuracy, knn_stddev_accuracy) = if knn.len() == per_repeat.len() {
            let (m, s) = mean_and_stddev(&knn);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        Ok(MetricsRecord {
            protocol: protocol.to_string(),
            metric: metric.to_string(),
            seed,
            repeats: per_repeat.len(),
            per_repeat,
            mean_accuracy,
            stddev_accuracy,
            knn_mean_accuracy,
            knn_stddev_accuracy,
        })
    }

    /// Final accuracy trace of repeat `r`, when one exists.
    pub fn trace(&self, r: usize) -> Option<&[TracePoint]> {
        self.per_repeat.get(r).and_then(|x| x.trace.as_deref())
    }
}

/// A metrics record plus the measured (non-deterministic) phase timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub record: MetricsRecord,
    pub timings_ms: BTreeMap<String, u64>,
}

/// Write the JSON summary to `path` and, when any repeat carries a trace, a
/// CSV with columns `iteration,pool_size,accuracy` (repeats concatenated,
/// iteration resetting to 0 at each repeat boundary) to
/// `<path stem>.trace.csv`.
pub fn write_outputs(output: &RunOutput, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(output)
        .map_err(|e| Error::Io(format!("serializing metrics: {e}")))?;
    std::fs::write(path, json + "\n")?;

    if output.record.per_repeat.iter().any(|r| r.trace.is_some()) {
        let csv_path = path.with_extension("trace.csv");
        let mut file = std::fs::File::create(&csv_path)?;
        writeln!(file, "iteration,pool_size,accuracy")?;
        for repeat in &output.record.per_repeat {
            if let Some(trace) = &repeat.trace {
                for point in trace {
                    writeln!(file, "{},{},{}", point.iteration, point.pool_size, point.accuracy)?;
                }
            }
        }
    }
    Ok(())
}
