/// Slack absorbing rounding in `level · n` before taking the ceiling.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// One-based order-statistic rank `⌈level · n⌉`, or `None` if it exceeds `n`.
/// Ranks below 1 are raised to 1.
pub fn quantile_rank(level: f64, n: usize) -> Option<usize> {
    let k = (level * n as f64 - RANK_TOLERANCE).ceil().max(1.0) as usize;
    (k <= n).then_some(k)
}

/// Conformal level `(1 − α)(1 + 1/n)`.
pub fn conformal_level(alpha: f64, n: usize) -> f64 {
    (1.0 - alpha) * (1.0 + 1.0 / n as f64)
}

/// The `k`-th smallest value (one-based); reorders `values`.
pub fn order_statistic(values: &mut [f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= values.len(), "rank {k} out of 1..={}", values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Empirical quantile at `level` under the `⌈level · n⌉` convention, with the
/// rank clipped to `n`.
pub fn empirical_quantile(values: &mut [f64], level: f64) -> f64 {
    let n = values.len();
    let k = quantile_rank(level, n).unwrap_or(n);
    order_statistic(values, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_the_ceiling_convention() {
        assert_eq!(quantile_rank(conformal_level(0.1, 9), 9), Some(9));
        assert_eq!(quantile_rank(conformal_level(0.5, 4), 4), Some(3));
        assert_eq!(quantile_rank(conformal_level(0.1, 8), 8), None);
        assert_eq!(quantile_rank(0.0, 5), Some(1));
        assert!((conformal_level(0.5, 4) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn order_statistics_match_sorting() {
        let mut v = vec![0.3, 0.1, 0.9, 0.5, 0.7];
        for k in 1..=5 {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            assert_eq!(order_statistic(&mut v, k), s[k - 1]);
        }
        let mut v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(empirical_quantile(&mut v, 0.9), 0.9);
        assert_eq!(empirical_quantile(&mut v, 1.5), 1.0);
    }
}
