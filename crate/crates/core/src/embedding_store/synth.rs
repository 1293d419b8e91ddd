use super::record::{Dataset, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Gaussian clusters with class `c` centred at `separation * e_c`.
///
/// `e_c` is the `c`-th standard basis vector, so class directions are exactly
/// orthogonal and independent of `seed`; fixtures drawn with different seeds
/// (for example a train pool and a test set) share the same class means.
/// Noise is unit-variance, drawn from [`SplitMix64::normal`] seeded with
/// `seed`, class-major then record then component. Ids are `C{c}-{i:04}` and
/// labels `C{c}`.
pub fn synth_fixture(
    n_classes: usize,
    per_class: usize,
    dimension: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes == 0 || per_class == 0 || dimension == 0 {
        return Err(Error::InvalidArgument(
            "class count, per-class count and dimension must be positive".into(),
        ));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "separation must be finite and non-negative, got {separation}"
        )));
    }
    if dimension < n_classes {
        return Err(Error::InvalidArgument(format!(
            "dimension {dimension} cannot hold {n_classes} orthogonal class directions"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut records = Vec::with_capacity(n_classes * per_class);
    for c in 0..n_classes {
        for i in 0..per_class {
            let vector = (0..dimension)
                .map(|j| {
                    let centre = if j == c { separation } else { 0.0 };
                    (centre + rng.normal()) as f32
                })
                .collect();
            records.push(EmbeddingRecord::pooled(format!("C{c}-{i:04}"), format!("C{c}"), vector));
        }
    }
    Dataset::with_dimension(records, dimension)
}
