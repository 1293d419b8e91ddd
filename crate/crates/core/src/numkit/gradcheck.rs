use crate::error::{Error, Result};

/// Largest relative error between analytic and central-difference gradients.
///
/// `loss` returns the loss value and its analytic gradient at the given
/// parameters. For every coordinate θ the numeric derivative is
/// `(loss(θ+eps) − loss(θ−eps)) / (2·eps)` and the error is
/// `|analytic − numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn gradient_check<F>(loss: F, params: &[f64], eps: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let (value, analytic) = loss(params);
    if !value.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    if analytic.len() != params.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: analytic.len(),
        });
    }
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        probe[i] = params[i] + eps;
        let plus = loss(&probe).0;
        probe[i] = params[i] - eps;
        let minus = loss(&probe).0;
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let err = gradient_check(|p| (0.5 * p[0] * p[0], vec![p[0]]), &[3.0], 1e-4).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn linear_is_exact_for_any_eps() {
        for eps in [1e-6, 1e-3, 0.5] {
            let err = gradient_check(|p| (2.5 * p[0] - p[1], vec![2.5, -1.0]), &[1.0, -4.0], eps)
                .unwrap();
            assert!(err < 1e-9, "eps {eps}: {err}");
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let err = gradient_check(|p| (p[0] * p[0], vec![p[0]]), &[2.0], 1e-4).unwrap();
        assert!(err > 0.3);
    }

    #[test]
    fn rejects_non_finite_loss() {
        assert!(gradient_check(|_| (f64::NAN, vec![0.0]), &[1.0], 1e-4).is_err());
        assert!(gradient_check(|p| (p[0], vec![1.0]), &[1.0], 0.0).is_err());
    }
}
