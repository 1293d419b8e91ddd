use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A precision / recall / F-score triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl Metrics {
    pub fn new(precision: f64, recall: f64, fscore: f64) -> Self {
        Self {
            precision,
            recall,
            fscore,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.precision, self.recall, self.fscore]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: usize,
    pub metrics: Metrics,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class metrics for every label present in `gold`, in label order.
/// Zero denominators yield 0.
pub fn class_metrics<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[P],
    gold: &[G],
) -> Result<Vec<ClassMetrics>> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    // label -> (tp, fp, fn, support)
    let mut counts: BTreeMap<&str, [usize; 4]> = BTreeMap::new();
    for g in gold {
        counts.entry(g.as_ref()).or_default()[3] += 1;
    }
    for (p, g) in predictions.iter().zip(gold) {
        let (p, g) = (p.as_ref(), g.as_ref());
        if p == g {
            counts.get_mut(g).expect("gold label")[0] += 1;
        } else {
            if let Some(c) = counts.get_mut(p) {
                c[1] += 1;
            }
            counts.get_mut(g).expect("gold label")[2] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(label, [tp, fp, fn_, support])| {
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let fscore = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: label.to_owned(),
                support,
                metrics: Metrics::new(precision, recall, fscore),
            }
        })
        .collect())
}

/// Macro-averaged precision, recall and F-score over the gold classes.
pub fn compute_metrics<P: AsRef<str>, G: AsRef<str>>(predictions: &[P], gold: &[G]) -> Result<Metrics> {
    let per_class = class_metrics(predictions, gold)?;
    let n = per_class.len() as f64;
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for c in &per_class {
        p += c.metrics.precision;
        r += c.metrics.recall;
        f += c.metrics.fscore;
    }
    Ok(Metrics::new(p / n, r / n, f / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect() {
        let gold = ["A", "B", "C", "A"];
        assert_eq!(compute_metrics(&gold, &gold).unwrap(), Metrics::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_confusion_matrix() {
        let gold = ["A", "A", "B", "B"];
        let pred = ["A", "B", "B", "B"];
        // A: tp 1, fp 0, fn 1 -> P 1, R 1/2, F 2/3
        // B: tp 2, fp 1, fn 0 -> P 2/3, R 1, F 4/5
        let m = compute_metrics(&pred, &gold).unwrap();
        assert!((m.precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((m.recall - 0.75).abs() < 1e-15);
        assert!((m.fscore - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
        assert!((m.precision - 0.8333).abs() < 1e-4);
        assert!((m.fscore - 0.7333).abs() < 1e-4);
    }

    #[test]
    fn total_miss() {
        assert_eq!(compute_metrics(&["B", "B"], &["A", "A"]).unwrap(), Metrics::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert!(compute_metrics(&["A"], &["A", "B"]).is_err());
        let empty: [&str; 0] = [];
        assert!(compute_metrics(&empty, &empty).is_err());
    }

    fn labelled() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<usize>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..4, n),
                prop::collection::vec(0u8..4, n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn joint_permutation_invariance((pred, gold, perm) in labelled()) {
            let name = |v: &[u8]| v.iter().map(|c| format!("L{c}")).collect::<Vec<_>>();
            let (p, g) = (name(&pred), name(&gold));
            let pp: Vec<&String> = perm.iter().map(|&i| &p[i]).collect();
            let gp: Vec<&String> = perm.iter().map(|&i| &g[i]).collect();
            let a = compute_metrics(&p, &g).unwrap();
            let b = compute_metrics(&pp, &gp).unwrap();
            prop_assert_eq!(a, b);
            for v in a.as_array() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
