use super::{decide, Aggregator, Prediction};
use crate::error::{Error, Result};
use crate::numkit::cosine_similarity;

/// Classifies `query` by aggregated cosine similarity to the support set.
pub fn ptsnn_classify<V, L>(support: &[(V, L)], query: &[f32], aggregator: Aggregator) -> Result<Prediction>
where
    V: AsRef<[f32]>,
    L: AsRef<str>,
{
    if support.is_empty() {
        return Err(Error::EmptyInput("support set"));
    }
    let affinities = support
        .iter()
        .map(|(v, l)| cosine_similarity(v.as_ref(), query).map(|s| (l.as_ref(), s)))
        .collect::<Result<Vec<_>>>()?;
    decide(affinities, aggregator)
}
