use serde::{Deserialize, Serialize};

use crate::embedding_store::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// An N-way-K-shot support sample: `k` record ids per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    /// Grouped by class in label order; within a class, in draw order.
    pub support: Vec<String>,
    pub seed: u64,
    pub k: usize,
}

/// Draws `k` records per class from `pool`.
///
/// Each class's ids are sorted, then the first `k` slots of a partial
/// Fisher–Yates shuffle are kept. The class stream is seeded with
/// `derive_seed(seed, label)`, so classes are sampled independently and the
/// result does not depend on record order in the file.
pub fn sample_episode(pool: &Dataset, k: usize, seed: u64) -> Result<Episode> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if pool.is_empty() {
        return Err(Error::EmptyInput("training pool"));
    }
    let mut support = Vec::with_capacity(k * pool.labels().len());
    for label in pool.labels() {
        let mut ids: Vec<&str> = pool
            .records()
            .iter()
            .filter(|r| &r.label == label)
            .map(|r| r.id.as_str())
            .collect();
        if ids.len() < k {
            return Err(Error::InsufficientClass {
                label: label.clone(),
                available: ids.len(),
                requested: k,
            });
        }
        ids.sort_unstable();
        let mut rng = SplitMix64::new(derive_seed(seed, label));
        let n = ids.len();
        for i in 0..k {
            let j = i + rng.below(n - i);
            ids.swap(i, j);
        }
        support.extend(ids[..k].iter().map(|s| (*s).to_owned()));
    }
    Ok(Episode { support, seed, k })
}
