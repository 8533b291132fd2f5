//! Log-domain helpers shared by the exponential functionals.

/// `log Σ exp(v_i)`, shifting by the maximum before exponentiating.
///
/// Entries equal to `-inf` contribute nothing; an empty or all `-inf` input
/// yields `-inf`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values
        .clone()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log Σ w_i exp(scale·f_i)` with `log_w` given in log domain.
pub fn weighted_log_sum_exp(log_weights: &[f64], values: &[f64], scale: f64) -> f64 {
    debug_assert_eq!(log_weights.len(), values.len());
    log_sum_exp(
        log_weights
            .iter()
            .zip(values)
            .map(move |(&lw, &v)| lw + scale * v),
    )
}

/// Softmax of `log_weights + values`, i.e. the normalized exponential tilt.
pub fn tilt(log_weights: &[f64], values: &[f64], scale: f64) -> Vec<f64> {
    let lse = weighted_log_sum_exp(log_weights, values, scale);
    log_weights
        .iter()
        .zip(values)
        .map(|(&lw, &v)| (lw + scale * v - lse).exp())
        .collect()
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_in_safe_range() {
        let v = [0.3, -1.2, 2.0];
        let naive = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(v) - naive).abs() < 1e-15);
    }

    #[test]
    fn lse_survives_overflow() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = [-1000.0, -1000.0];
        assert!((log_sum_exp(v) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn lse_ignores_neg_inf() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, 1.5]), 1.5);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(std::iter::empty::<f64>()), f64::NEG_INFINITY);
    }

    #[test]
    fn tilt_normalizes() {
        let lw = [0.5f64.ln(), 0.5f64.ln()];
        let t = tilt(&lw, &[3f64.ln(), 0.0], 1.0);
        assert!((t[0] - 0.75).abs() < 1e-15);
        assert!((t[1] - 0.25).abs() < 1e-15);
    }
}
