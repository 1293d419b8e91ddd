//! Linear softmax probe over frozen embeddings.
//!
//! This is the desk-scale stand-in for a fine-tuned transformer with a
//! linear classification layer: the encoder is frozen and only the final
//! layer is trained, on the episode's support set. Reports label it as an
//! approximation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{AdamWHyper, AdamWState};
use crate::snn::{decide, Aggregator, Prediction};

pub const PROBE_MODEL_FORMAT: &str = "fewshot-probe-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub hyper: AdamWHyper,
    pub epochs: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hyper: AdamWHyper::default(),
            epochs: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTraining {
    pub seed: u64,
    pub config: ProbeConfig,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
}

/// `softmax(W x + b)` with one row of `W` per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub format: String,
    pub dimension: usize,
    /// Lexicographically sorted; row `i` of `weights` scores `labels[i]`.
    pub labels: Vec<String>,
    /// `labels.len() × dimension`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub training: ProbeTraining,
}

impl ProbeModel {
    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dimension)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    fn flatten(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    fn assign(&mut self, flat: &[f64]) {
        let n = self.weights.len();
        self.weights.copy_from_slice(&flat[..n]);
        self.bias.copy_from_slice(&flat[n..]);
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != PROBE_MODEL_FORMAT {
            return Err(Error::InvalidArgument(format!(
                "unsupported model format {:?}",
                self.format
            )));
        }
        let n = self.labels.len();
        if self.dimension == 0 || self.weights.len() != n * self.dimension || self.bias.len() != n {
            return Err(Error::InvalidArgument("probe model shapes are inconsistent".into()));
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("probe parameters"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ProbeModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fsutil::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }
}

/// Softmax with the max-logit shift.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Mean cross-entropy and its flat gradient (weights, then bias).
fn loss_and_grad(model: &ProbeModel, xs: &[Vec<f64>], ys: &[usize]) -> (f64, Vec<f64>) {
    let (n, d) = (model.labels.len(), model.dimension);
    let mut grad = vec![0.0; n * d + n];
    let mut loss = 0.0;
    let scale = 1.0 / xs.len() as f64;
    for (x, &y) in xs.iter().zip(ys) {
        let p = softmax(&model.logits(x));
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for k in 0..n {
            let delta = scale * (p[k] - if k == y { 1.0 } else { 0.0 });
            for (g, v) in grad[k * d..(k + 1) * d].iter_mut().zip(x) {
                *g += delta * v;
            }
            grad[n * d + k] += delta;
        }
    }
    (loss * scale, grad)
}

/// Fits the probe on `support` by full-batch AdamW from a zero initialisation.
pub fn train_probe<V, L>(support: &[(V, L)], config: &ProbeConfig, seed: u64) -> Result<ProbeModel>
where
    V: AsRef<[f32]>,
    L: AsRef<str>,
{
    config.hyper.validate()?;
    let first = support.first().ok_or(Error::EmptyInput("support set"))?;
    let dimension = first.0.as_ref().len();
    if dimension == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    let mut labels: Vec<String> = support.iter().map(|(_, l)| l.as_ref().to_owned()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::SingleClass(labels[0].clone()));
    }
    let mut xs = Vec::with_capacity(support.len());
    let mut ys = Vec::with_capacity(support.len());
    for (v, l) in support {
        let v = v.as_ref();
        if v.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: v.len(),
                context: "probe support".into(),
            });
        }
        xs.push(widen(v));
        ys.push(labels.binary_search_by(|x| x.as_str().cmp(l.as_ref())).expect("label present"));
    }
    let n = labels.len();
    let mut model = ProbeModel {
        format: PROBE_MODEL_FORMAT.to_owned(),
        dimension,
        labels,
        weights: vec![0.0; n * dimension],
        bias: vec![0.0; n],
        training: ProbeTraining {
            seed,
            config: *config,
            initial_loss: 0.0,
            final_loss: 0.0,
            loss_history: Vec::with_capacity(config.epochs),
        },
    };
    let mut flat = model.flatten();
    let mut state = AdamWState::new(flat.len());
    let (initial_loss, _) = loss_and_grad(&model, &xs, &ys);
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_grad(&model, &xs, &ys);
        if !loss.is_finite() {
            return Err(Error::NonFinite("probe loss"));
        }
        model.training.loss_history.push(loss);
        state.step(&mut flat, &grad, &config.hyper)?;
        model.assign(&flat);
    }
    let (final_loss, _) = loss_and_grad(&model, &xs, &ys);
    if !final_loss.is_finite() {
        return Err(Error::NonFinite("probe loss"));
    }
    model.training.initial_loss = initial_loss;
    model.training.final_loss = final_loss;
    Ok(model)
}

/// Class probabilities and the arg-max label (ties to the smallest label).
pub fn probe_classify(model: &ProbeModel, embedding: &[f32]) -> Result<Prediction> {
    if embedding.len() != model.dimension {
        return Err(Error::DimensionMismatch {
            expected: model.dimension,
            found: embedding.len(),
            context: "probe input".into(),
        });
    }
    let probs = softmax(&model.logits(&widen(embedding)));
    decide(
        model.labels.iter().map(String::as_str).zip(probs),
        Aggregator::Mean,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_store::synth_fixture;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn support(seed: u64) -> Vec<(Vec<f32>, String)> {
        synth_fixture(3, 6, 5, 6.0, seed)
            .unwrap()
            .records()
            .iter()
            .map(|r| (r.pooled.clone().unwrap(), r.label.clone()))
            .collect()
    }

    fn fit_config(epochs: usize) -> ProbeConfig {
        ProbeConfig {
            hyper: AdamWHyper {
                lr: 0.05,
                ..AdamWHyper::default()
            },
            epochs,
        }
    }

    #[test]
    fn separable_support_is_fitted() {
        let s = support(1);
        let model = train_probe(&s, &fit_config(200), 0).unwrap();
        for (v, l) in &s {
            assert_eq!(&probe_classify(&model, v).unwrap().label, l);
        }
        assert!(model.training.final_loss < model.training.initial_loss);
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let s = support(2);
        let model = train_probe(&s, &fit_config(0), 0).unwrap();
        let p = probe_classify(&model, &s[5].0).unwrap();
        assert_eq!(p.label, "C0");
        for prob in p.scores.values() {
            assert_eq!(*prob, 1.0 / 3.0);
        }
        assert!((model.training.initial_loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let s = support(3);
        assert_eq!(
            train_probe(&s, &fit_config(30), 4).unwrap(),
            train_probe(&s, &fit_config(30), 4).unwrap()
        );
    }

    #[test]
    fn loss_non_increasing_at_checkpoints() {
        let s = support(4);
        let model = train_probe(&s, &fit_config(200), 0).unwrap();
        let checkpoints: Vec<f64> = model.training.loss_history.iter().step_by(20).copied().collect();
        assert!(checkpoints.windows(2).all(|w| w[1] <= w[0]), "{checkpoints:?}");
    }

    #[test]
    fn errors() {
        let one_class = vec![(vec![1.0f32, 0.0], "A"), (vec![0.0, 1.0], "A")];
        assert!(matches!(train_probe(&one_class, &fit_config(1), 0), Err(Error::SingleClass(_))));
        let ragged = vec![(vec![1.0f32, 0.0], "A"), (vec![0.0], "B")];
        assert!(train_probe(&ragged, &fit_config(1), 0).is_err());
        let model = train_probe(&support(5), &fit_config(1), 0).unwrap();
        assert!(probe_classify(&model, &[1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let model = train_probe(&support(6), &fit_config(5), 0).unwrap();
        assert_eq!(ProbeModel::from_json(&model.to_json().unwrap()).unwrap(), model);
    }

    #[test]
    fn shifted_logits_keep_argmax() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let c = rng.uniform(-100.0, 100.0);
            let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
            let argmax = |p: &[f64]| {
                p.iter().enumerate().fold(0, |best, (i, v)| if *v > p[best] { i } else { best })
            };
            assert_eq!(argmax(&softmax(&logits)), argmax(&softmax(&shifted)));
        }
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(x in prop::collection::vec(-5.0f32..5.0, 5), epochs in 0usize..20) {
            let model = train_probe(&support(7), &fit_config(epochs), 0).unwrap();
            let p = probe_classify(&model, &x).unwrap();
            let sum: f64 = p.scores.values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(p.scores.values().all(|&v| v > 0.0));
        }
    }
}
