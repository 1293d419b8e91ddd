use std::io::Write;

use serde::Serialize;

use crate::embedding_store::Dataset;
use crate::error::{Error, Result};

/// An unordered pair of record indices; target 0 = same class, 1 = different.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairExample {
    pub index_a: usize,
    pub index_b: usize,
    pub target: u8,
}

/// Number of unordered pairs among `total` items.
pub fn pair_count(total: usize) -> usize {
    total * total.saturating_sub(1) / 2
}

/// Every pair `i < j` once, ordered lexicographically by `(i, j)`.
pub fn build_pairs(train: &Dataset) -> Vec<PairExample> {
    let labels: Vec<&str> = train.records().iter().map(|r| r.label.as_str()).collect();
    build_pairs_from_labels(&labels)
}

pub fn build_pairs_from_labels<L: AsRef<str>>(labels: &[L]) -> Vec<PairExample> {
    let n = labels.len();
    let mut pairs = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            let target = u8::from(labels[i].as_ref() != labels[j].as_ref());
            pairs.push(PairExample {
                index_a: i,
                index_b: j,
                target,
            });
        }
    }
    pairs
}

#[derive(Serialize)]
struct PairLine<'a> {
    a: &'a str,
    b: &'a str,
    target: u8,
}

/// Writes pairs as JSON Lines `{"a": id, "b": id, "target": 0|1}`.
pub fn write_pairs(train: &Dataset, pairs: &[PairExample], mut out: impl Write) -> Result<()> {
    let records = train.records();
    for p in pairs {
        let (a, b) = match (records.get(p.index_a), records.get(p.index_b)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "pair ({}, {}) out of range for {} records",
                    p.index_a,
                    p.index_b,
                    records.len()
                )))
            }
        };
        let line = PairLine {
            a: &a.id,
            b: &b.id,
            target: p.target,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
