//! Siamese pair scoring: two weight-sharing BiGRU branches and a distance head.
//!
//! Heads map the encoder outputs `e1`, `e2` to a score in `(0, 1)`:
//!
//! - weighted L1: `σ(w · |e1 − e2| + b)`
//! - Euclidean: `σ(‖e1 − e2‖)`
//!
//! Both are symmetric in their arguments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::gru::{bigru_backward, bigru_forward, BiGruCache, GruParams};
use super::FlatParams;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    #[default]
    WeightedL1,
    Euclidean,
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::WeightedL1 => "weighted-l1",
            HeadKind::Euclidean => "euclidean",
        })
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted-l1" => Ok(HeadKind::WeightedL1),
            "euclidean" => Ok(HeadKind::Euclidean),
            other => Err(Error::InvalidArgument(format!(
                "unknown head {other:?} (expected weighted-l1 or euclidean)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairHead {
    WeightedL1 { weights: Vec<f64>, bias: f64 },
    Euclidean,
}

impl PairHead {
    pub fn zeros(kind: HeadKind, embedding_len: usize) -> Self {
        match kind {
            HeadKind::WeightedL1 => PairHead::WeightedL1 {
                weights: vec![0.0; embedding_len],
                bias: 0.0,
            },
            HeadKind::Euclidean => PairHead::Euclidean,
        }
    }

    /// Weights then bias, uniform in `±1/√embedding_len`.
    pub fn init(kind: HeadKind, embedding_len: usize, rng: &mut SplitMix64) -> Self {
        match kind {
            HeadKind::WeightedL1 => {
                let s = 1.0 / (embedding_len as f64).sqrt();
                let weights = (0..embedding_len).map(|_| rng.uniform(-s, s)).collect();
                PairHead::WeightedL1 {
                    weights,
                    bias: rng.uniform(-s, s),
                }
            }
            HeadKind::Euclidean => PairHead::Euclidean,
        }
    }

    pub fn kind(&self) -> HeadKind {
        match self {
            PairHead::WeightedL1 { .. } => HeadKind::WeightedL1,
            PairHead::Euclidean => HeadKind::Euclidean,
        }
    }

    pub fn validate(&self, embedding_len: usize) -> Result<()> {
        if let PairHead::WeightedL1 { weights, bias } = self {
            if weights.len() != embedding_len {
                return Err(Error::DimensionMismatch {
                    expected: embedding_len,
                    found: weights.len(),
                    context: "pair head weights".into(),
                });
            }
            if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite("pair head parameters"));
            }
        }
        Ok(())
    }
}

/// Flattening order: weights, then bias. The Euclidean head has none.
impl FlatParams for PairHead {
    fn num_params(&self) -> usize {
        match self {
            PairHead::WeightedL1 { weights, .. } => weights.len() + 1,
            PairHead::Euclidean => 0,
        }
    }

    fn flatten(&self) -> Vec<f64> {
        match self {
            PairHead::WeightedL1 { weights, bias } => {
                let mut out = weights.clone();
                out.push(*bias);
                out
            }
            PairHead::Euclidean => Vec::new(),
        }
    }

    fn assign(&mut self, flat: &[f64]) {
        if let PairHead::WeightedL1 { weights, bias } = self {
            let n = weights.len();
            weights.copy_from_slice(&flat[..n]);
            *bias = flat[n];
        }
    }
}

/// Encoder plus head: everything a Siamese pair score depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiameseParams {
    pub gru: GruParams,
    pub head: PairHead,
}

/// Gradients share the parameter layout.
pub type SiameseGrads = SiameseParams;

impl SiameseParams {
    pub fn init(input: usize, hidden: usize, kind: HeadKind, rng: &mut SplitMix64) -> Self {
        let gru = GruParams::init(input, hidden, rng);
        let head = PairHead::init(kind, 2 * hidden, rng);
        Self { gru, head }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            gru: GruParams::zeros(self.gru.input, self.gru.hidden),
            head: PairHead::zeros(self.head.kind(), self.gru.output_len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gru.validate()?;
        self.head.validate(self.gru.output_len())
    }
}

/// Flattening order: GRU parameters, then head parameters.
impl FlatParams for SiameseParams {
    fn num_params(&self) -> usize {
        self.gru.num_params() + self.head.num_params()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = self.gru.flatten();
        out.extend(self.head.flatten());
        out
    }

    fn assign(&mut self, flat: &[f64]) {
        let n = self.gru.num_params();
        self.gru.assign(&flat[..n]);
        self.head.assign(&flat[n..]);
    }
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    diff: Vec<f64>,
    pre: f64,
    out: f64,
}

impl HeadCache {
    /// Head pre-activation (the argument of σ).
    pub fn pre_activation(&self) -> f64 {
        self.pre
    }
}

/// Scores two encoder outputs.
pub fn head_forward(head: &PairHead, e1: &[f64], e2: &[f64]) -> (f64, HeadCache) {
    let diff: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a - b).collect();
    let pre = match head {
        PairHead::WeightedL1 { weights, bias } => {
            weights.iter().zip(&diff).map(|(w, d)| w * d.abs()).sum::<f64>() + bias
        }
        PairHead::Euclidean => diff.iter().map(|d| d * d).sum::<f64>().sqrt(),
    };
    let out = sigmoid(pre);
    (out, HeadCache { diff, pre, out })
}

/// Returns the head gradient and `∂L/∂e1`; `∂L/∂e2` is its negation.
pub fn head_backward(head: &PairHead, cache: &HeadCache, d_out: f64) -> (PairHead, Vec<f64>) {
    let d_pre = d_out * cache.out * (1.0 - cache.out);
    match head {
        PairHead::WeightedL1 { weights, .. } => {
            let grad = PairHead::WeightedL1 {
                weights: cache.diff.iter().map(|d| d_pre * d.abs()).collect(),
                bias: d_pre,
            };
            let de1 = weights
                .iter()
                .zip(&cache.diff)
                .map(|(w, d)| d_pre * w * sign(*d))
                .collect();
            (grad, de1)
        }
        PairHead::Euclidean => {
            let norm = cache.pre;
            let de1 = if norm > 0.0 {
                cache.diff.iter().map(|d| d_pre * d / norm).collect()
            } else {
                vec![0.0; cache.diff.len()]
            };
            (PairHead::Euclidean, de1)
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Intermediates of one [`soe_pair_forward`] call.
#[derive(Debug, Clone)]
pub struct PairCache {
    a: BiGruCache,
    b: BiGruCache,
    head: HeadCache,
}

impl PairCache {
    pub fn head(&self) -> &HeadCache {
        &self.head
    }
}

/// Encodes both sequences with the same encoder and scores the pair.
pub fn soe_pair_forward<A: AsRef<[f32]>, B: AsRef<[f32]>>(
    gru: &GruParams,
    head: &PairHead,
    seq_a: &[A],
    seq_b: &[B],
) -> Result<(f64, PairCache)> {
    let (e1, a) = bigru_forward(gru, seq_a)?;
    let (e2, b) = bigru_forward(gru, seq_b)?;
    let (out, head) = head_forward(head, &e1, &e2);
    Ok((out, PairCache { a, b, head }))
}

/// Exact gradients of the pair score scaled by `d_out`, summed over both
/// weight-sharing branches.
pub fn soe_pair_backward(
    gru: &GruParams,
    head: &PairHead,
    cache: &PairCache,
    d_out: f64,
) -> SiameseGrads {
    let (head_grad, de1) = head_backward(head, &cache.head, d_out);
    let de2: Vec<f64> = de1.iter().map(|v| -v).collect();
    let mut gru_grad = GruParams::zeros(gru.input, gru.hidden);
    bigru_backward(gru, &cache.a, &de1, &mut gru_grad);
    bigru_backward(gru, &cache.b, &de2, &mut gru_grad);
    SiameseGrads {
        gru: gru_grad,
        head: head_grad,
    }
}
