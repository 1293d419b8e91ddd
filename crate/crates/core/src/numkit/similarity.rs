use crate::error::{Error, Result};

/// `a·b / (‖a‖‖b‖)`, accumulated in `f64`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    finish(dot, na, nb)
}

pub fn cosine_similarity_f64(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    finish(dot, na, nb)
}

fn finish(dot: f64, na: f64, nb: f64) -> Result<f64> {
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let s = dot / (na.sqrt() * nb.sqrt());
    if !s.is_finite() {
        return Err(Error::NonFinite("cosine similarity"));
    }
    Ok(s.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 4 / (√5 · √5)
        let oracle = 4.0 / (5f64.sqrt() * 5f64.sqrt());
        let got = cosine_similarity(&[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.8).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    fn nonzero_pair() -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
        (1usize..16).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f32..10.0, n),
                prop::collection::vec(-10.0f32..10.0, n),
            )
        })
        .prop_filter("non-zero norms", |(a, b)| {
            a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3)
        })
    }

    proptest! {
        #[test]
        fn symmetric_bounded_scale_invariant((a, b) in nonzero_pair(), alpha in 0.01f32..100.0) {
            let ab = cosine_similarity(&a, &b).unwrap();
            let ba = cosine_similarity(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab.abs() <= 1.0 + 1e-6);
            let scaled: Vec<f32> = a.iter().map(|x| x * alpha).collect();
            let s = cosine_similarity(&scaled, &b).unwrap();
            prop_assert!((s - ab).abs() < 1e-6);
        }
    }
}
