use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::sample_episode;
use super::metrics::{class_metrics, compute_metrics};
use super::report::{MetricsReport, ReportConfig, RunMetrics, REPORT_FORMAT};
use crate::embedding_store::Dataset;
use crate::error::{Error, Result};
use crate::probe::{probe_classify, train_probe, ProbeConfig};
use crate::snn::{ptsnn_classify, train_soe, Aggregator, SoeConfig, SoeSupport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Aggregated cosine similarity over frozen embeddings.
    PtSnn,
    /// Trained BiGRU Siamese network.
    SoeSnn,
    /// Linear softmax probe over frozen embeddings.
    Probe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PtSnn => "ptsnn",
            Method::SoeSnn => "soesnn",
            Method::Probe => "probe",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ptsnn" => Ok(Method::PtSnn),
            "soesnn" => Ok(Method::SoeSnn),
            "probe" => Ok(Method::Probe),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (expected ptsnn, soesnn or probe)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub aggregator: Aggregator,
    pub soe: SoeConfig,
    pub probe: ProbeConfig,
    /// Run `i` uses seed `seed_base + i`.
    pub seed_base: u64,
    /// Free-form tag naming the embedding source, echoed into the report.
    pub model_tag: String,
    /// Include per-class metrics for every run.
    pub verbose: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            aggregator: Aggregator::Mean,
            soe: SoeConfig::default(),
            probe: ProbeConfig::default(),
            seed_base: 0,
            model_tag: String::new(),
            verbose: false,
        }
    }
}

const PROBE_NOTE: &str = "probe: linear softmax layer trained on frozen embeddings; \
     an approximation of a fine-tuned transformer baseline, not a reproduction";

struct RunOutcome {
    predictions: Vec<String>,
    initial_loss: Option<f64>,
    final_loss: Option<f64>,
}

fn run_once(
    support: &Dataset,
    test: &Dataset,
    method: Method,
    config: &EvalConfig,
    seed: u64,
) -> Result<RunOutcome> {
    match method {
        Method::PtSnn => {
            let items = first_order(support)?;
            let queries = first_order(test)?;
            let predictions = queries
                .par_iter()
                .map(|(q, _)| ptsnn_classify(&items, q, config.aggregator).map(|p| p.label))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunOutcome {
                predictions,
                initial_loss: None,
                final_loss: None,
            })
        }
        Method::SoeSnn => {
            let model = train_soe(support, &config.soe, seed)?;
            let items = support
                .records()
                .iter()
                .map(|r| r.sequence(config.soe.prefer_pooled).map(|s| (s, r.label.clone())))
                .collect::<Result<Vec<_>>>()?;
            let encoded = SoeSupport::new(&model, &items)?;
            let predictions = test
                .records()
                .par_iter()
                .map(|r| {
                    let q = r.sequence(config.soe.prefer_pooled)?;
                    encoded.classify(&q, config.aggregator).map(|p| p.label)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RunOutcome {
                predictions,
                initial_loss: Some(model.training.initial_loss),
                final_loss: Some(model.training.final_loss),
            })
        }
        Method::Probe => {
            let items = first_order(support)?;
            let model = train_probe(&items, &config.probe, seed)?;
            let queries = first_order(test)?;
            let predictions = queries
                .par_iter()
                .map(|(q, _)| probe_classify(&model, q).map(|p| p.label))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunOutcome {
                predictions,
                initial_loss: Some(model.training.initial_loss),
                final_loss: Some(model.training.final_loss),
            })
        }
    }
}

fn first_order(ds: &Dataset) -> Result<Vec<(Vec<f32>, String)>> {
    ds.records()
        .iter()
        .map(|r| r.first_order_vector().map(|v| (v, r.label.clone())))
        .collect()
}

/// Runs `m_runs` episodes of `k` shots per class and averages the metrics.
///
/// Run `i` samples its support set from `train_pool` with seed
/// `config.seed_base + i`, fits the method on it (the same seed initialises
/// any trained model), and classifies the entire `test` set.
pub fn evaluate(
    train_pool: &Dataset,
    test: &Dataset,
    method: Method,
    k: usize,
    m_runs: usize,
    config: &EvalConfig,
) -> Result<MetricsReport> {
    if m_runs == 0 {
        return Err(Error::InvalidArgument("m_runs must be at least 1".into()));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if train_pool.dimension() != test.dimension() {
        return Err(Error::DimensionMismatch {
            expected: train_pool.dimension(),
            found: test.dimension(),
            context: "test set vs training pool".into(),
        });
    }
    match method {
        Method::SoeSnn => config.soe.validate()?,
        Method::Probe => config.probe.hyper.validate()?,
        Method::PtSnn => {}
    }
    let gold: Vec<&str> = test.records().iter().map(|r| r.label.as_str()).collect();
    let seeds: Vec<u64> = (0..m_runs as u64).map(|i| config.seed_base + i).collect();
    let mut per_run = Vec::with_capacity(m_runs);
    for &seed in &seeds {
        let episode = sample_episode(train_pool, k, seed)?;
        let support = train_pool.select(&episode.support)?;
        let outcome = run_once(&support, test, method, config, seed)?;
        let metrics = compute_metrics(&outcome.predictions, &gold)?;
        let per_class = if config.verbose {
            Some(class_metrics(&outcome.predictions, &gold)?)
        } else {
            None
        };
        per_run.push(RunMetrics {
            seed,
            metrics,
            support: episode.support,
            initial_loss: outcome.initial_loss,
            final_loss: outcome.final_loss,
            per_class,
        });
    }
    let averaged = MetricsReport::average(&per_run)?;
    let notes = if method == Method::Probe {
        vec![PROBE_NOTE.to_owned()]
    } else {
        Vec::new()
    };
    Ok(MetricsReport {
        format: REPORT_FORMAT.to_owned(),
        engine_version: crate::ENGINE_VERSION.to_owned(),
        timestamp: None,
        config: ReportConfig {
            method,
            model_tag: config.model_tag.clone(),
            k,
            m_runs,
            aggregator: (method != Method::Probe).then_some(config.aggregator),
            seeds,
            soe: (method == Method::SoeSnn).then_some(config.soe),
            probe: (method == Method::Probe).then_some(config.probe),
            train_records: train_pool.len(),
            test_records: test.len(),
        },
        per_run,
        averaged,
        notes,
    })
}
