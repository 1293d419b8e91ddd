//! Episode sampling, macro metrics, M-run evaluation and the paired t-test.

mod episode;
mod harness;
mod metrics;
mod report;
mod ttest;

pub use episode::{sample_episode, Episode};
pub use harness::{evaluate, EvalConfig, Method};
pub use metrics::{class_metrics, compute_metrics, ClassMetrics, Metrics};
pub use report::{MetricsReport, ReportConfig, RunMetrics, REPORT_FORMAT};
pub use ttest::{paired_ttest, TTestResult};
