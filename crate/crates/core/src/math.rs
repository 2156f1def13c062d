//! Float helpers that work without `std`.

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `-p ln p` with the `0 ln 0 = 0` convention.
#[inline]
pub fn neg_xlogx(p: f64) -> f64 {
    if p > 0.0 {
        -p * ln(p)
    } else {
        0.0
    }
}

/// Compensated (Neumaier) summation.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = total + v;
        if libm::fabs(total) >= libm::fabs(v) {
            comp += (total - t) + v;
        } else {
            comp += (v - t) + total;
        }
        total = t;
    }
    total + comp
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = xs.iter().map(|x| exp(x - max)).sum();
    max + ln(s)
}

/// Softmax into `out` (same length as `logits`).
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = exp(l - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let v = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((sum(v) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
    }

    #[test]
    fn softmax_is_distribution() {
        let mut out = [0.0; 3];
        softmax_into(&[1000.0, 1000.0, -5.0], &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((out[0] - 0.5).abs() < 1e-12);
    }
}
