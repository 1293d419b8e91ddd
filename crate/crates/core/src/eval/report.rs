use std::path::Path;

use serde::{Deserialize, Serialize};

use super::harness::Method;
use super::metrics::{ClassMetrics, Metrics};
use crate::error::{Error, Result};
use crate::probe::ProbeConfig;
use crate::snn::{Aggregator, SoeConfig};

pub const REPORT_FORMAT: &str = "fewshot-metrics-report/1";

/// Echo of everything that determined a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub method: Method,
    pub model_tag: String,
    pub k: usize,
    pub m_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregator: Option<Aggregator>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soe: Option<SoeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    pub train_records: usize,
    pub test_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub support: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<Vec<ClassMetrics>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub engine_version: String,
    /// Seconds since the Unix epoch; the only field allowed to differ
    /// between identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub config: ReportConfig,
    pub per_run: Vec<RunMetrics>,
    pub averaged: Metrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricsReport {
    /// Arithmetic mean of the per-run triples, summed in run order.
    pub fn average(runs: &[RunMetrics]) -> Result<Metrics> {
        if runs.is_empty() {
            return Err(Error::EmptyInput("evaluation runs"));
        }
        let m = runs.len() as f64;
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for run in runs {
            p += run.metrics.precision;
            r += run.metrics.recall;
            f += run.metrics.fscore;
        }
        Ok(Metrics::new(p / m, r / m, f / m))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: MetricsReport = serde_json::from_str(text)?;
        if report.format != REPORT_FORMAT {
            return Err(Error::InvalidArgument(format!(
                "unsupported report format {:?}",
                report.format
            )));
        }
        Ok(report)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fsutil::write_atomic(path.as_ref(), self.to_json_pretty()?.as_bytes())
    }

    /// Copy with the timestamp cleared, for payload comparisons.
    pub fn without_timestamp(&self) -> Self {
        Self {
            timestamp: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(seed: u64, v: f64) -> RunMetrics {
        RunMetrics {
            seed,
            metrics: Metrics::new(v, v, v),
            support: vec![],
            initial_loss: None,
            final_loss: None,
            per_class: None,
        }
    }

    #[test]
    fn averages_runs() {
        let avg = MetricsReport::average(&[run(0, 0.2), run(1, 0.4), run(2, 0.6)]).unwrap();
        let want = (0.2 + 0.4 + 0.6) / 3.0;
        assert_eq!(avg, Metrics::new(want, want, want));
        assert!((avg.fscore - 0.4).abs() < 1e-15);
        assert_eq!(MetricsReport::average(&[run(0, 0.37)]).unwrap(), Metrics::new(0.37, 0.37, 0.37));
        assert!(MetricsReport::average(&[]).is_err());
    }
}
