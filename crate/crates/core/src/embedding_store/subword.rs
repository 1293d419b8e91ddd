use super::record::{EmbeddingRecord, Span};
use crate::error::{Error, Result};

/// Component-wise mean of `tokens[span.start..span.end]`.
///
/// Sums run in `f64` and divide by the number of subwords in the span; the
/// result is rounded back to `f32`.
pub fn average_subwords(tokens: &[Vec<f32>], span: Span) -> Result<Vec<f32>> {
    if span.is_empty() || span.end > tokens.len() {
        return Err(Error::InvalidSpan {
            start: span.start,
            end: span.end,
            len: tokens.len(),
        });
    }
    mean_of(&tokens[span.start..span.end])
}

/// Component-wise mean of a non-empty list of equal-length vectors.
pub fn mean_of(vectors: &[Vec<f32>]) -> Result<Vec<f32>> {
    let first = vectors.first().ok_or(Error::EmptyInput("vectors to average"))?;
    let mut acc = vec![0.0f64; first.len()];
    for v in vectors {
        if v.len() != acc.len() {
            return Err(Error::LengthMismatch {
                left: acc.len(),
                right: v.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(v) {
            *a += f64::from(x);
        }
    }
    let n = vectors.len() as f64;
    Ok(acc.into_iter().map(|a| (a / n) as f32).collect())
}

/// One averaged vector per word span, in span order.
pub fn pool_words(record: &EmbeddingRecord) -> Result<Vec<(usize, Vec<f32>)>> {
    let missing = |what: &str| Error::InvalidRecord {
        id: record.id.clone(),
        message: format!("{what} required for word pooling"),
    };
    let tokens = record.tokens.as_ref().ok_or_else(|| missing("tokens"))?;
    let spans = record.word_spans.as_ref().ok_or_else(|| missing("word_spans"))?;
    spans
        .iter()
        .enumerate()
        .map(|(i, &span)| average_subwords(tokens, span).map(|v| (i, v)))
        .collect()
}
