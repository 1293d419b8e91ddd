//! Siamese-network few-shot classifiers.
//!
//! Both classifiers compute an affinity between the query and every support
//! item (higher means more likely the same class), reduce the affinities per
//! class with an [`Aggregator`], and return the arg-max class. Ties go to the
//! lexicographically smallest label.
//!
//! - PT-SNN: affinity is the cosine similarity of frozen embeddings.
//! - SOE-SNN: affinity is `1 − out`, where `out` is the trained pair head's
//!   score. Pairs are trained with target 0 for same-class and 1 for
//!   different-class, so `out` behaves as a dissimilarity.

mod pairs;
mod ptsnn;
mod soe;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pairs::{build_pairs, build_pairs_from_labels, pair_count, write_pairs, PairExample};
pub use ptsnn::ptsnn_classify;
pub use soe::{
    soe_loss_and_grad, soesnn_classify, train_soe, SoeConfig, SoeModel, SoeSupport,
    TrainingSummary, SOE_MODEL_FORMAT,
};

/// Per-class reduction of affinities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Mean => "mean",
            Aggregator::Max => "max",
        })
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregator::Mean),
            "max" => Ok(Aggregator::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregator {other:?} (expected mean or max)"
            ))),
        }
    }
}

/// A classification decision with the per-class scores behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub scores: BTreeMap<String, f64>,
}

/// Aggregates `(label, affinity)` pairs and picks the best class.
pub(crate) fn decide<'a>(
    affinities: impl IntoIterator<Item = (&'a str, f64)>,
    aggregator: Aggregator,
) -> Result<Prediction> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (label, a) in affinities {
        if !a.is_finite() {
            return Err(Error::NonFinite("affinity"));
        }
        let entry = acc.entry(label).or_insert(match aggregator {
            Aggregator::Mean => (0.0, 0),
            Aggregator::Max => (f64::NEG_INFINITY, 0),
        });
        match aggregator {
            Aggregator::Mean => entry.0 += a,
            Aggregator::Max => entry.0 = entry.0.max(a),
        }
        entry.1 += 1;
    }
    if acc.is_empty() {
        return Err(Error::EmptyInput("support set"));
    }
    let scores: BTreeMap<String, f64> = acc
        .into_iter()
        .map(|(label, (s, n))| {
            let score = match aggregator {
                Aggregator::Mean => s / n as f64,
                Aggregator::Max => s,
            };
            (label.to_owned(), score)
        })
        .collect();
    let mut best: Option<(&String, f64)> = None;
    for (label, &score) in &scores {
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((label, score));
        }
    }
    let label = best.map(|(l, _)| l.clone()).expect("non-empty scores");
    Ok(Prediction { label, scores })
}
