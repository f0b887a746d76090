//! Log-domain helpers shared by the decoder and the estimators.

use alloc::vec::Vec;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// `log(sum(exp(values)))` without overflow; `-inf` for an empty or all
/// `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + ln(sum)
}

/// Log-sum-exp over an iterator, in a single streaming pass.
pub fn log_sum_exp_iter<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for v in values {
        if v == f64::NEG_INFINITY {
            continue;
        }
        if v > max {
            acc = acc * exp(max - v) + 1.0;
            max = v;
        } else {
            acc += exp(v - max);
        }
    }
    if max == f64::NEG_INFINITY {
        max
    } else {
        max + ln(acc)
    }
}

/// Turns unnormalized log-weights into a probability vector. Returns the
/// normalizer, or `None` when every weight is `-inf` (or NaN shows up).
pub fn normalize_log(log_weights: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = log_sum_exp(log_weights);
    if !norm.is_finite() {
        return None;
    }
    let mut probs: Vec<f64> = log_weights.iter().map(|&w| exp(w - norm)).collect();
    // Re-normalize the linear values so the sum is 1 to rounding error.
    let total: f64 = probs.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return None;
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Some((probs, norm))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in bits; zero entries contribute nothing.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log2(p))
        .sum()
}
