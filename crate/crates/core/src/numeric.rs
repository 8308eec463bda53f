//! Small numerical helpers.

/// Pairwise (cascade) summation; order-deterministic for a given slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (l, r) = values.split_at(values.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_small_and_large() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        let v: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 50_005_000.0);
    }

    #[test]
    fn beats_naive_summation() {
        let mut v: Vec<f64> = std::iter::repeat_n(1e-16, 1 << 16).collect();
        v.push(1.0);
        let exact = 1.0 + (1 << 16) as f64 * 1e-16;
        let naive: f64 = v.iter().rev().sum();
        assert!((pairwise_sum(&v) - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > 1e-12);
    }
}
