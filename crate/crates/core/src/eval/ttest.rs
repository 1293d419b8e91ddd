use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::error::{Error, Result};

/// One-sample t-test over the difference of two metric triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub d: [f64; 3],
}

/// `d = a − b`, `t = mean(d) / (sd(d) / √3)` with the sample (n − 1)
/// standard deviation, and the two-sided p-value of Student's t with two
/// degrees of freedom, `p = 1 − |t| / √(t² + 2)`.
pub fn paired_ttest(a: &Metrics, b: &Metrics) -> Result<TTestResult> {
    let (a, b) = (a.as_array(), b.as_array());
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric triple"));
    }
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if sd <= 1e-12 * scale.max(1.0) {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (sd / n.sqrt());
    let p = 1.0 - t.abs() / (t * t + 2.0).sqrt();
    Ok(TTestResult { t, p, d })
}
