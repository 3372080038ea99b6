//! Small numeric helpers shared across modules.

/// Neumaier-compensated summation. Summation order is the iteration order, so
/// results are deterministic for a fixed input.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running compensated prefix sums.
pub fn compensated_cumsum(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Indices that sort `values` in non-increasing order; ties keep original order.
pub fn argsort_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn cumsum_matches_prefix_sums() {
        let c = compensated_cumsum(&[1.0, 2.0, 3.5]);
        assert_eq!(c, vec![1.0, 3.0, 6.5]);
    }

    #[test]
    fn argsort_is_stable_on_ties() {
        assert_eq!(argsort_desc(&[1.0, 3.0, 1.0, 3.0]), vec![1, 3, 0, 2]);
    }
}
