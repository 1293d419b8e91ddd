//! Second-order-embedding SNN: a trainable BiGRU encoder shared by both
//! branches, a distance head, BCE on same/different pairs, full-batch AdamW.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pairs::{build_pairs, PairExample};
use super::{decide, Aggregator, Prediction};
use crate::embedding_store::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{
    bce_grad, bce_loss, bigru_backward, bigru_forward, head_backward, head_forward, sigmoid,
    AdamWHyper, AdamWState, BiGruCache, FlatParams, HeadKind, SiameseParams,
};
use crate::rng::SplitMix64;

/// Value of the `format` key in serialised models.
pub const SOE_MODEL_FORMAT: &str = "fewshot-soe-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoeConfig {
    pub hyper: AdamWHyper,
    pub epochs: usize,
    pub hidden: usize,
    pub head: HeadKind,
    /// Pairs per optimizer step; `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Feed the pooled vector (as a length-1 sequence) even when token
    /// vectors are present.
    pub prefer_pooled: bool,
}

impl Default for SoeConfig {
    fn default() -> Self {
        Self {
            hyper: AdamWHyper::default(),
            epochs: 300,
            hidden: 16,
            head: HeadKind::WeightedL1,
            batch_size: None,
            prefer_pooled: false,
        }
    }
}

impl SoeConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden size must be positive".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// What a training run did, kept with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub seed: u64,
    pub config: SoeConfig,
    pub pairs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Mean training loss seen during each epoch, before its updates.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeModel {
    pub format: String,
    pub params: SiameseParams,
    pub training: TrainingSummary,
}

impl SoeModel {
    pub fn input_size(&self) -> usize {
        self.params.gru.input
    }

    /// Encoder output for one sequence.
    pub fn encode<S: AsRef<[f32]>>(&self, sequence: &[S]) -> Result<Vec<f64>> {
        Ok(bigru_forward(&self.params.gru, sequence)?.0)
    }

    /// Pair dissimilarity score in `(0, 1)`.
    pub fn pair_score<A: AsRef<[f32]>, B: AsRef<[f32]>>(&self, a: &[A], b: &[B]) -> Result<f64> {
        let e1 = self.encode(a)?;
        let e2 = self.encode(b)?;
        Ok(head_forward(&self.params.head, &e1, &e2).0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SoeModel = serde_json::from_str(text)?;
        if model.format != SOE_MODEL_FORMAT {
            return Err(Error::InvalidArgument(format!(
                "unsupported model format {:?}",
                model.format
            )));
        }
        model.params.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fsutil::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Mean BCE over `pairs` and its gradient with respect to the flattened
/// parameters.
///
/// Each sequence taking part in a pair is encoded once; gradients with
/// respect to the encodings are accumulated across pairs and pushed back
/// through the encoder once per sequence.
pub fn soe_loss_and_grad<S: AsRef<[f32]>>(
    params: &SiameseParams,
    sequences: &[Vec<S>],
    pairs: &[PairExample],
) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("training pairs"));
    }
    let mut used = vec![false; sequences.len()];
    for p in pairs {
        used[p.index_a] = true;
        used[p.index_b] = true;
    }
    let encoded: Vec<Option<(Vec<f64>, BiGruCache)>> = sequences
        .iter()
        .zip(&used)
        .map(|(s, &u)| u.then(|| bigru_forward(&params.gru, s)).transpose())
        .collect::<Result<_>>()?;
    let emb = |i: usize| &encoded[i].as_ref().expect("encoded").0;

    let scale = 1.0 / pairs.len() as f64;
    let mut grads = params.zeros_like();
    let mut head_grad = grads.head.flatten();
    let mut d_emb: Vec<Vec<f64>> = vec![vec![0.0; params.gru.output_len()]; sequences.len()];
    let mut loss = 0.0;
    for p in pairs {
        let target = f64::from(p.target);
        let (out, cache) = head_forward(&params.head, emb(p.index_a), emb(p.index_b));
        loss += bce_loss(out, target);
        let d_out = scale * bce_grad(out, target);
        let (hg, de1) = head_backward(&params.head, &cache, d_out);
        for (acc, g) in head_grad.iter_mut().zip(hg.flatten()) {
            *acc += g;
        }
        for (k, v) in de1.iter().enumerate() {
            d_emb[p.index_a][k] += v;
            d_emb[p.index_b][k] -= v;
        }
    }
    let loss = loss * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    grads.head.assign(&head_grad);
    for (i, slot) in encoded.iter().enumerate() {
        if let Some((_, cache)) = slot {
            bigru_backward(&params.gru, cache, &d_emb[i], &mut grads.gru);
        }
    }
    Ok((loss, grads.flatten()))
}

/// Trains an SOE-SNN on every unordered pair of `train`.
pub fn train_soe(train: &Dataset, config: &SoeConfig, seed: u64) -> Result<SoeModel> {
    config.validate()?;
    if train.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "SOE training needs at least 2 records, got {}",
            train.len()
        )));
    }
    if train.labels().len() < 2 {
        return Err(Error::SingleClass(train.labels()[0].clone()));
    }
    let sequences = train
        .records()
        .iter()
        .map(|r| r.sequence(config.prefer_pooled))
        .collect::<Result<Vec<_>>>()?;
    let pairs = build_pairs(train);

    let mut rng = SplitMix64::new(seed);
    let mut params = SiameseParams::init(train.dimension(), config.hidden, config.head, &mut rng);
    let mut flat = params.flatten();
    let mut state = AdamWState::new(flat.len());
    let (initial_loss, mut grad) = soe_loss_and_grad(&params, &sequences, &pairs)?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order = pairs.clone();

    for epoch in 0..config.epochs {
        match config.batch_size {
            None => {
                if epoch > 0 {
                    let (loss, g) = soe_loss_and_grad(&params, &sequences, &pairs)?;
                    history.push(loss);
                    grad = g;
                } else {
                    history.push(initial_loss);
                }
                state.step(&mut flat, &grad, &config.hyper)?;
                params.assign(&flat);
            }
            Some(batch) => {
                rng.shuffle(&mut order);
                let mut epoch_loss = 0.0;
                for chunk in order.chunks(batch) {
                    let (loss, g) = soe_loss_and_grad(&params, &sequences, chunk)?;
                    epoch_loss += loss * chunk.len() as f64;
                    state.step(&mut flat, &g, &config.hyper)?;
                    params.assign(&flat);
                }
                history.push(epoch_loss / order.len() as f64);
            }
        }
    }
    let final_loss = if config.epochs == 0 {
        initial_loss
    } else {
        soe_loss_and_grad(&params, &sequences, &pairs)?.0
    };
    Ok(SoeModel {
        format: SOE_MODEL_FORMAT.to_owned(),
        params,
        training: TrainingSummary {
            seed,
            config: *config,
            pairs: pairs.len(),
            initial_loss,
            final_loss,
            loss_history: history,
        },
    })
}

/// A support set encoded once for repeated queries.
#[derive(Debug, Clone)]
pub struct SoeSupport<'m> {
    model: &'m SoeModel,
    items: Vec<(Vec<f64>, String)>,
}

impl<'m> SoeSupport<'m> {
    pub fn new<S, L>(model: &'m SoeModel, support: &[(Vec<S>, L)]) -> Result<Self>
    where
        S: AsRef<[f32]>,
        L: AsRef<str>,
    {
        if support.is_empty() {
            return Err(Error::EmptyInput("support set"));
        }
        let items = support
            .iter()
            .map(|(s, l)| model.encode(s).map(|e| (e, l.as_ref().to_owned())))
            .collect::<Result<_>>()?;
        Ok(Self { model, items })
    }

    /// Affinity `1 − out` to every support item, aggregated per class.
    pub fn classify<S: AsRef<[f32]>>(&self, query: &[S], aggregator: Aggregator) -> Result<Prediction> {
        let q = self.model.encode(query)?;
        let affinities = self.items.iter().map(|(e, l)| {
            let (_, cache) = head_forward(&self.model.params.head, &q, e);
            // 1 − σ(s) = σ(−s), without cancellation near 1.
            (l.as_str(), sigmoid(-cache.pre_activation()))
        });
        decide(affinities, aggregator)
    }
}

/// Classifies `query` against `support` with a trained model.
pub fn soesnn_classify<S, L, Q>(
    model: &SoeModel,
    support: &[(Vec<S>, L)],
    query: &[Q],
    aggregator: Aggregator,
) -> Result<Prediction>
where
    S: AsRef<[f32]>,
    L: AsRef<str>,
    Q: AsRef<[f32]>,
{
    SoeSupport::new(model, support)?.classify(query, aggregator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_store::{synth_fixture, EmbeddingRecord, Span};
    use crate::numkit::{gradient_check, soe_pair_backward, soe_pair_forward, PairHead};

    fn small_config(epochs: usize) -> SoeConfig {
        SoeConfig {
            epochs,
            hidden: 4,
            ..SoeConfig::default()
        }
    }

    #[test]
    fn batched_gradient_equals_sum_of_pair_gradients() {
        let ds = synth_fixture(2, 3, 3, 2.0, 5).unwrap();
        let seqs: Vec<Vec<Vec<f32>>> = ds.records().iter().map(|r| r.sequence(false).unwrap()).collect();
        let pairs = build_pairs(&ds);
        let mut rng = SplitMix64::new(1);
        let params = SiameseParams::init(3, 2, HeadKind::WeightedL1, &mut rng);
        let (loss, grad) = soe_loss_and_grad(&params, &seqs, &pairs).unwrap();

        let mut want_loss = 0.0;
        let mut want = vec![0.0; grad.len()];
        for p in &pairs {
            let t = f64::from(p.target);
            let (out, cache) =
                soe_pair_forward(&params.gru, &params.head, &seqs[p.index_a], &seqs[p.index_b]).unwrap();
            want_loss += bce_loss(out, t) / pairs.len() as f64;
            let g = soe_pair_backward(&params.gru, &params.head, &cache, bce_grad(out, t) / pairs.len() as f64);
            for (w, v) in want.iter_mut().zip(g.flatten()) {
                *w += v;
            }
        }
        assert!((loss - want_loss).abs() < 1e-12);
        for (a, b) in grad.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_gradient_matches_finite_differences() {
        let ds = synth_fixture(2, 3, 2, 1.0, 9).unwrap();
        let seqs: Vec<Vec<Vec<f32>>> = ds.records().iter().map(|r| r.sequence(false).unwrap()).collect();
        let pairs = build_pairs(&ds);
        let mut rng = SplitMix64::new(2);
        let params = SiameseParams::init(2, 3, HeadKind::Euclidean, &mut rng);
        let loss = |flat: &[f64]| {
            let mut p = params.clone();
            p.assign(flat);
            soe_loss_and_grad(&p, &seqs, &pairs).unwrap()
        };
        let err = gradient_check(loss, &params.flatten(), 1e-4).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn training_reduces_loss() {
        let ds = synth_fixture(2, 4, 8, 10.0, 7).unwrap();
        let model = train_soe(&ds, &small_config(60), 3).unwrap();
        assert!(model.training.final_loss < model.training.initial_loss);
        assert_eq!(model.training.pairs, 28);
        assert_eq!(model.training.loss_history.len(), 60);
        assert_eq!(model.training.loss_history[0], model.training.initial_loss);
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let ds = synth_fixture(2, 4, 8, 10.0, 7).unwrap();
        let model = train_soe(&ds, &small_config(0), 3).unwrap();
        let mut rng = SplitMix64::new(3);
        let init = SiameseParams::init(8, 4, HeadKind::WeightedL1, &mut rng);
        assert_eq!(model.params, init);
        assert_eq!(model.training.final_loss, model.training.initial_loss);
    }

    #[test]
    fn deterministic_training() {
        let ds = synth_fixture(3, 3, 4, 4.0, 1).unwrap();
        let a = train_soe(&ds, &small_config(20), 11).unwrap();
        let b = train_soe(&ds, &small_config(20), 11).unwrap();
        assert_eq!(a.params.flatten(), b.params.flatten());
        let batched = SoeConfig {
            batch_size: Some(5),
            ..small_config(5)
        };
        let c = train_soe(&ds, &batched, 11).unwrap();
        let d = train_soe(&ds, &batched, 11).unwrap();
        assert_eq!(c, d);
        assert!(c.training.final_loss.is_finite());
    }

    #[test]
    fn rejects_single_class() {
        let ds = Dataset::new(vec![
            EmbeddingRecord::pooled("a", "X", vec![1.0, 0.0]),
            EmbeddingRecord::pooled("b", "X", vec![0.0, 1.0]),
        ])
        .unwrap();
        assert!(matches!(train_soe(&ds, &small_config(1), 0), Err(Error::SingleClass(_))));
    }

    #[test]
    fn identical_query_affinity_with_negative_bias() {
        let ds = synth_fixture(2, 2, 2, 1.0, 0).unwrap();
        let mut model = train_soe(&ds, &small_config(0), 0).unwrap();
        let PairHead::WeightedL1 { bias, .. } = &mut model.params.head else { unreachable!() };
        *bias = -0.8;
        let x = vec![vec![0.3f32, -0.2]];
        let p = soesnn_classify(&model, &[(x.clone(), "X")], &x, Aggregator::Mean).unwrap();
        assert_eq!(p.label, "X");
        let want = 1.0 - sigmoid(-0.8);
        assert!((p.scores["X"] - want).abs() < 1e-15);
        assert!(p.scores["X"] > 0.5);
    }

    #[test]
    fn affinity_symmetric_and_open_interval() {
        let ds = synth_fixture(2, 3, 3, 3.0, 4).unwrap();
        let model = train_soe(&ds, &small_config(10), 4).unwrap();
        let a = vec![vec![0.5f32, 1.0, -1.0], vec![0.1, 0.2, 0.3]];
        let b = vec![vec![-0.4f32, 0.0, 2.0]];
        let ab = soesnn_classify(&model, &[(b.clone(), "B")], &a, Aggregator::Mean).unwrap();
        let ba = soesnn_classify(&model, &[(a.clone(), "A")], &b, Aggregator::Mean).unwrap();
        assert_eq!(ab.scores["B"], ba.scores["A"]);
        assert!(ab.scores["B"] > 0.0 && ab.scores["B"] < 1.0);
        assert!((ab.scores["B"] - (1.0 - model.pair_score(&a, &b).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn token_records_train_and_classify() {
        let mut rng = SplitMix64::new(6);
        let mut records = Vec::new();
        for (c, label) in ["A", "B"].iter().enumerate() {
            for i in 0..3 {
                let t = 2 + i % 2;
                let tokens: Vec<Vec<f32>> = (0..t)
                    .map(|_| (0..3).map(|j| (if j == c { 3.0 } else { 0.0 }) + rng.normal() as f32 * 0.3).collect())
                    .collect();
                records.push(EmbeddingRecord::with_tokens(format!("{label}{i}"), *label, tokens, Some(vec![Span::new(0, 1), Span::new(1, t)])));
            }
        }
        let ds = Dataset::new(records).unwrap();
        let model = train_soe(&ds, &small_config(40), 2).unwrap();
        assert!(model.training.final_loss < model.training.initial_loss);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ds = synth_fixture(2, 3, 3, 3.0, 4).unwrap();
        let model = train_soe(&ds, &small_config(3), 4).unwrap();
        let back = SoeModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let bits = |m: &SoeModel| m.params.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&model));
        let broken = model.to_json().unwrap().replace(SOE_MODEL_FORMAT, "other/9");
        assert!(SoeModel::from_json(&broken).is_err());
    }
}
