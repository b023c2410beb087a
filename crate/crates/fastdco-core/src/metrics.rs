//! Result-quality metrics.

/// Fraction of the true top-`k` ids that appear in the found top-`k`.
///
/// `found` may be shorter than `k` (an index that returned fewer neighbors
/// simply scores lower); `truth` must hold at least `k` ids.
pub fn recall_at_k(found: &[u32], truth: &[u32], k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    assert!(truth.len() >= k, "ground truth has fewer than k ids");
    let truth = &truth[..k];
    let found = &found[..found.len().min(k)];
    let mut hits = 0usize;
    for id in found {
        if truth.contains(id) {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_partial_overlap() {
        assert_eq!(recall_at_k(&[1, 2, 3], &[3, 2, 1], 3), 1.0);
        assert_eq!(recall_at_k(&[1, 9, 8], &[1, 2, 3], 3), 1.0 / 3.0);
        assert_eq!(recall_at_k(&[7], &[1, 2, 3], 3), 0.0);
    }

    #[test]
    fn short_found_list_scores_against_full_k() {
        assert_eq!(recall_at_k(&[2], &[2, 5], 2), 0.5);
    }

    #[test]
    fn only_first_k_of_truth_counts() {
        // id 9 is in the truth list but beyond rank 2, so it is not a hit.
        assert_eq!(recall_at_k(&[9, 1], &[1, 2, 9], 2), 0.5);
    }
}
