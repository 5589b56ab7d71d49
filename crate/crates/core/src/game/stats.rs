//! Order-fixed reductions, so that sums do not depend on how samples were
//! scheduled.

const BLOCK: usize = 32;

/// Pairwise (cascade) summation with a fixed split: results depend only on
/// the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean (zero for fewer than two
/// samples). Samples are shifted by the first one before summing, so that
/// constant samples have exactly zero standard error.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = values[0];
    let shifted: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let offset = pairwise_sum(&shifted) / n as f64;
    let mean = shift + offset;
    if n < 2 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = shifted.iter().map(|d| (d - offset) * (d - offset)).collect();
    let variance = pairwise_sum(&squares) / (n - 1) as f64;
    (mean, (variance / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_and_standard_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_standard_error(&[7.0]), (7.0, 0.0));
        assert_eq!(mean_and_standard_error(&[3.0; 10]), (3.0, 0.0));
        assert_eq!(mean_and_standard_error(&[0.1; 12_345]), (0.1, 0.0));
    }
}
