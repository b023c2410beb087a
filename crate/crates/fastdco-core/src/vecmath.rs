//! Small dense float kernels shared by every module.
//!
//! Two accumulation disciplines coexist on purpose:
//!
//! * `l2_sq` and `dot_seq` add strictly left-to-right. They are the canonical
//!   definitions used wherever two independent code paths must agree on the
//!   exact f32 value (brute-force ground truth vs. test oracles).
//! * `dot` and `l2_sq_fast` use four independent accumulators so the
//!   optimizer can vectorize; they feed the hot loops (partial inner products
//!   in DCOs, k-means assignment) where only self-consistency matters.

use alloc::vec::Vec;

/// Squared Euclidean distance, sequential accumulation.
#[inline]
pub fn l2_sq(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Inner product, sequential accumulation.
#[inline]
pub fn dot_seq(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Inner product with four-lane accumulation (vectorizer-friendly).
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f32, 0.0f32, 0.0f32, 0.0f32);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut acc = (s0 + s1) + (s2 + s3);
    for i in chunks * 4..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Squared Euclidean distance with four-lane accumulation.
#[inline]
pub fn l2_sq_fast(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f32, 0.0f32, 0.0f32, 0.0f32);
    for c in 0..chunks {
        let i = c * 4;
        let d0 = a[i] - b[i];
        let d1 = a[i + 1] - b[i + 1];
        let d2 = a[i + 2] - b[i + 2];
        let d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    let mut acc = (s0 + s1) + (s2 + s3);
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Squared norm, sequential accumulation.
#[inline]
pub fn norm_sq(a: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for &v in a {
        acc += v * v;
    }
    acc
}

/// `a - b`, elementwise.
pub fn sub(a: &[f32], b: &[f32]) -> Vec<f32> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Mean of each coordinate over `n` rows of width `dim` (f64 accumulation).
pub fn column_means(rows: &[f32], dim: usize) -> Vec<f32> {
    assert!(dim > 0 && rows.len().is_multiple_of(dim));
    let n = rows.len() / dim;
    let mut acc = alloc::vec![0.0f64; dim];
    for r in 0..n {
        let row = &rows[r * dim..(r + 1) * dim];
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    let inv = 1.0 / n.max(1) as f64;
    acc.into_iter().map(|a| (a * inv) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_agree_on_small_inputs() {
        let a = [1.0f32, 2.0, 3.0, 4.0, 5.0];
        let b = [5.0f32, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(l2_sq(&a, &b), 16.0 + 4.0 + 0.0 + 4.0 + 16.0);
        assert_eq!(dot(&a, &b), dot_seq(&a, &b));
        assert_eq!(l2_sq_fast(&a, &b), l2_sq(&a, &b));
        assert_eq!(norm_sq(&a), 55.0);
    }

    #[test]
    fn empty_slices_yield_zero() {
        assert_eq!(l2_sq(&[], &[]), 0.0);
        assert_eq!(dot(&[], &[]), 0.0);
        assert_eq!(norm_sq(&[]), 0.0);
    }

    #[test]
    fn column_means_two_rows() {
        let rows = [0.0f32, 2.0, 4.0, 6.0];
        assert_eq!(column_means(&rows, 2), alloc::vec![2.0f32, 4.0]);
    }
}
