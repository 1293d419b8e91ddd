use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::subword::{mean_of, pool_words};
use crate::error::{Error, Result};

/// Half-open token range `[start, end)`; serialised as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

/// One labelled sample: a pooled vector, a token sequence, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<Vec<f32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_spans: Option<Vec<Span>>,
}

impl EmbeddingRecord {
    pub fn pooled(id: impl Into<String>, label: impl Into<String>, vector: Vec<f32>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            pooled: Some(vector),
            tokens: None,
            word_spans: None,
        }
    }

    pub fn with_tokens(
        id: impl Into<String>,
        label: impl Into<String>,
        tokens: Vec<Vec<f32>>,
        word_spans: Option<Vec<Span>>,
    ) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            pooled: None,
            tokens: Some(tokens),
            word_spans,
        }
    }

    /// Dimension implied by the record's payload, if any.
    pub fn dimension(&self) -> Option<usize> {
        self.pooled
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.tokens.as_ref().and_then(|t| t.first()).map(Vec::len))
    }

    /// Checks the per-record invariants against dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let invalid = |message: String| Error::InvalidRecord {
            id: self.id.clone(),
            message,
        };
        if self.pooled.is_none() && self.tokens.is_none() {
            return Err(invalid("neither pooled nor tokens present".into()));
        }
        let mismatch = |found: usize, what: &str| Error::DimensionMismatch {
            expected: dim,
            found,
            context: format!("record {:?} {what}", self.id),
        };
        if let Some(p) = &self.pooled {
            if p.len() != dim {
                return Err(mismatch(p.len(), "pooled"));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("pooled vector"));
            }
        }
        if let Some(tokens) = &self.tokens {
            if tokens.is_empty() {
                return Err(invalid("token sequence is empty".into()));
            }
            for (i, t) in tokens.iter().enumerate() {
                if t.len() != dim {
                    return Err(mismatch(t.len(), &format!("token {i}")));
                }
                if t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("token vector"));
                }
            }
        }
        if let Some(spans) = &self.word_spans {
            let Some(tokens) = &self.tokens else {
                return Err(invalid("word_spans without tokens".into()));
            };
            let mut floor = 0;
            for span in spans {
                if span.is_empty() || span.end > tokens.len() {
                    return Err(Error::InvalidSpan {
                        start: span.start,
                        end: span.end,
                        len: tokens.len(),
                    });
                }
                if span.start < floor {
                    return Err(invalid(format!(
                        "span [{}, {}) overlaps or precedes its predecessor",
                        span.start, span.end
                    )));
                }
                floor = span.end;
            }
        }
        Ok(())
    }

    /// The single vector used by similarity-based methods.
    ///
    /// `pooled` when present; otherwise the mean of the word vectors when
    /// spans exist; otherwise the mean of all tokens.
    pub fn first_order_vector(&self) -> Result<Vec<f32>> {
        if let Some(p) = &self.pooled {
            return Ok(p.clone());
        }
        if self.word_spans.as_ref().is_some_and(|s| !s.is_empty()) {
            let words: Vec<Vec<f32>> = pool_words(self)?.into_iter().map(|(_, v)| v).collect();
            return mean_of(&words);
        }
        match &self.tokens {
            Some(tokens) => mean_of(tokens),
            None => Err(Error::InvalidRecord {
                id: self.id.clone(),
                message: "neither pooled nor tokens present".into(),
            }),
        }
    }

    /// The vector sequence fed to the recurrent encoder.
    ///
    /// Word vectors when spans exist, else raw tokens, else the pooled vector
    /// as a length-1 sequence. With `prefer_pooled`, a present pooled vector
    /// always wins.
    pub fn sequence(&self, prefer_pooled: bool) -> Result<Vec<Vec<f32>>> {
        if prefer_pooled {
            if let Some(p) = &self.pooled {
                return Ok(vec![p.clone()]);
            }
        }
        if self.word_spans.as_ref().is_some_and(|s| !s.is_empty()) {
            return Ok(pool_words(self)?.into_iter().map(|(_, v)| v).collect());
        }
        if let Some(tokens) = &self.tokens {
            return Ok(tokens.clone());
        }
        match &self.pooled {
            Some(p) => Ok(vec![p.clone()]),
            None => Err(Error::InvalidRecord {
                id: self.id.clone(),
                message: "neither pooled nor tokens present".into(),
            }),
        }
    }
}

/// An immutable, validated collection of records sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<EmbeddingRecord>,
    dimension: usize,
    labels: Vec<String>,
}

impl Dataset {
    /// Validates `records` and infers the dimension from the first one.
    pub fn new(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyInput("dataset records"))?;
        let dimension = first.dimension().ok_or_else(|| Error::InvalidRecord {
            id: first.id.clone(),
            message: "neither pooled nor tokens present".into(),
        })?;
        Self::with_dimension(records, dimension)
    }

    pub fn with_dimension(records: Vec<EmbeddingRecord>, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        let mut labels = BTreeSet::new();
        for record in &records {
            record.validate(dimension)?;
            if !seen.insert(record.id.as_str()) {
                return Err(Error::DuplicateId(record.id.clone()));
            }
            labels.insert(record.label.clone());
        }
        Ok(Self {
            records,
            dimension,
            labels: labels.into_iter().collect(),
        })
    }

    /// A dataset with no records.
    pub fn empty(dimension: usize) -> Result<Self> {
        Self::with_dimension(Vec::new(), dimension)
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Distinct labels in lexicographic order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Records restricted to the given ids, in the order the ids are listed.
    pub fn select(&self, ids: &[String]) -> Result<Dataset> {
        let index: std::collections::HashMap<&str, &EmbeddingRecord> =
            self.records.iter().map(|r| (r.id.as_str(), r)).collect();
        let records = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).map(|r| (*r).clone()).ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown record id {id:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_dimension(records, self.dimension)
    }
}
