//! Distance-computation operators (DCOs): the pluggable kernel a search
//! loop calls per candidate, which either certifies "this candidate cannot
//! beat the current threshold" from a partial scan, or falls through to the
//! exact distance.
//!
//! All operators share the decomposed form over rotated, centered vectors:
//!
//! ```text
//! ||x - q||^2 = C1 - C2 - C3,
//! C1 = ||x - mean||^2 + ||q - mean||^2   (precomputed),
//! C2 = 2 <x_d, q_d>                      (first d rotated dimensions),
//! C3 = 2 <x_r, q_r>                      (remaining dimensions).
//! ```
//!
//! Dropping `C3` leaves the approximate distance `dis' = C1 - C2` with
//! error `-C3`, whose per-query standard deviation at each checkpoint is
//! precomputed in [`QueryContext::sigma_suffix`]. The quantile-bound rule
//! prunes when `dis' - m * sigma_d > tau`; learned variants replace that
//! margin with a fitted linear rule. A negative `tau` encodes "the result
//! queue is not full yet" and disables pruning entirely.
//!
//! Exactness discipline: `dco_exact` accumulates `C2` block-by-block over
//! the context's checkpoints, so any candidate that survives every
//! intermediate test in the incremental operators returns a distance
//! bit-identical to `dco_exact` under the same context.

use crate::learn::{Cascade, LinearClassifier};
use crate::quant::{adc, LookupTable};
use crate::transform::QueryContext;
use crate::vecmath;

/// Outcome of one distance-computation call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcoResult {
    /// `true`: the candidate was excluded by a bound; `distance` is then
    /// the approximate distance the decision was made on.
    pub pruned: bool,
    /// Squared distance: exact when kept, approximate (`dis'`-style) when
    /// pruned.
    pub distance: f32,
    /// Vector dimensions touched (table lookups are counted separately by
    /// the search layer).
    pub dims_scanned: u32,
    /// Whether the full exact distance was evaluated (`!pruned`).
    pub used_exact: bool,
}

fn assert_stride(ctx: &QueryContext, dim: usize, delta_d: usize) {
    assert!(delta_d >= 1, "delta_d must be at least 1");
    assert!(
        ctx.checkpoints.len() == dim.div_ceil(delta_d)
            && ctx.checkpoints[0] == delta_d.min(dim),
        "delta_d does not match the context's checkpoint layout"
    );
}

/// Exact distance through the `C1 - C2` decomposition, scanning all
/// dimensions. Never prunes.
pub fn dco_exact(x_rot: &[f32], ctx: &QueryContext, x_norm2: f32) -> DcoResult {
    let dim = x_rot.len();
    debug_assert_eq!(dim, ctx.q_rot.len());
    let c1 = x_norm2 + ctx.q_norm2;
    let mut c2 = 0.0f32;
    let mut prev = 0usize;
    for &cp in &ctx.checkpoints {
        c2 += 2.0 * vecmath::dot(&x_rot[prev..cp], &ctx.q_rot[prev..cp]);
        prev = cp;
    }
    DcoResult {
        pruned: false,
        distance: c1 - c2,
        dims_scanned: dim as u32,
        used_exact: true,
    }
}

/// Quantile-bound pruning at a single projection dimension `d` (which must
/// be one of the context's checkpoints).
///
/// Prunes iff `tau >= 0` and `C1 - C2 - m * sigma_d > tau`, returning the
/// approximate `dis' = C1 - C2` with `dims_scanned = d`. Otherwise finishes
/// the scan and returns the exact distance. At `d = D` the stored sigma is
/// exactly zero, so both the decision and the value are exact.
pub fn dco_bsa_res(
    x_rot: &[f32],
    ctx: &QueryContext,
    x_norm2: f32,
    tau: f32,
    m: f32,
    d: usize,
) -> DcoResult {
    let dim = x_rot.len();
    debug_assert_eq!(dim, ctx.q_rot.len());
    let pos = ctx
        .checkpoints
        .iter()
        .position(|&cp| cp == d)
        .expect("projection dim d must be one of the context checkpoints");
    let sigma = ctx.sigma_suffix[pos];
    let c1 = x_norm2 + ctx.q_norm2;
    let c2 = 2.0 * vecmath::dot(&x_rot[..d], &ctx.q_rot[..d]);
    let dis = c1 - c2;
    if tau >= 0.0 && dis - m * sigma > tau {
        return DcoResult {
            pruned: true,
            distance: dis,
            dims_scanned: d as u32,
            used_exact: false,
        };
    }
    let c3 = 2.0 * vecmath::dot(&x_rot[d..], &ctx.q_rot[d..]);
    DcoResult {
        pruned: false,
        distance: dis - c3,
        dims_scanned: dim as u32,
        used_exact: true,
    }
}

/// Incremental quantile-bound pruning: applies the `dis' - m * sigma_d >
/// tau` test at every checkpoint (`delta_d, 2*delta_d, ...`), stopping at
/// the first success. Reaching the final checkpoint yields the exact
/// distance and an exact decision (sigma is zero there).
pub fn dco_bsa_res_incremental(
    x_rot: &[f32],
    ctx: &QueryContext,
    x_norm2: f32,
    tau: f32,
    m: f32,
    delta_d: usize,
) -> DcoResult {
    let dim = x_rot.len();
    debug_assert_eq!(dim, ctx.q_rot.len());
    assert_stride(ctx, dim, delta_d);
    let c1 = x_norm2 + ctx.q_norm2;
    let mut c2 = 0.0f32;
    let mut prev = 0usize;
    let last = ctx.checkpoints.len() - 1;
    for (j, &cp) in ctx.checkpoints.iter().enumerate() {
        c2 += 2.0 * vecmath::dot(&x_rot[prev..cp], &ctx.q_rot[prev..cp]);
        prev = cp;
        let dis = c1 - c2;
        if j == last {
            // cp == dim: dis is the exact distance and the test is exact.
            let pruned = tau >= 0.0 && dis > tau;
            return DcoResult {
                pruned,
                distance: dis,
                dims_scanned: dim as u32,
                used_exact: !pruned,
            };
        }
        if tau >= 0.0 && dis - m * ctx.sigma_suffix[j] > tau {
            return DcoResult {
                pruned: true,
                distance: dis,
                dims_scanned: cp as u32,
                used_exact: false,
            };
        }
    }
    unreachable!("checkpoints always end at the full dimension")
}

/// Random-projection hypothesis-test pruning: at checkpoint `d`, scales the
/// partial squared distance by `D / d` and prunes when it exceeds
/// `(1 + epsilon0 / sqrt(d))^2 * tau`. Requires a context built from a
/// random rotor (the guarantee rests on distance preservation of random
/// projections); at the final checkpoint the factor is exactly one, so the
/// decision and value are exact.
///
/// `x_norm2` is unused (this operator never forms the decomposition) and
/// accepted only for signature uniformity with the other operators.
pub fn dco_ads(
    x_rot: &[f32],
    ctx: &QueryContext,
    x_norm2: f32,
    tau: f32,
    epsilon0: f32,
    delta_d: usize,
) -> DcoResult {
    let _ = x_norm2;
    let dim = x_rot.len();
    debug_assert_eq!(dim, ctx.q_rot.len());
    debug_assert!(epsilon0 > 0.0, "epsilon0 must be positive");
    assert_stride(ctx, dim, delta_d);
    let mut partial = 0.0f32;
    let mut prev = 0usize;
    let last = ctx.checkpoints.len() - 1;
    for (j, &cp) in ctx.checkpoints.iter().enumerate() {
        partial += vecmath::l2_sq_fast(&x_rot[prev..cp], &ctx.q_rot[prev..cp]);
        prev = cp;
        if j == last {
            // Full scan: the partial IS the exact distance.
            let pruned = tau >= 0.0 && partial > tau;
            return DcoResult {
                pruned,
                distance: partial,
                dims_scanned: dim as u32,
                used_exact: !pruned,
            };
        }
        if tau >= 0.0 {
            let scaled = partial * (dim as f32 / cp as f32);
            let factor = 1.0 + epsilon0 / libm::sqrtf(cp as f32);
            if scaled > factor * factor * tau {
                return DcoResult {
                    pruned: true,
                    distance: scaled,
                    dims_scanned: cp as u32,
                    used_exact: false,
                };
            }
        }
    }
    unreachable!("checkpoints always end at the full dimension")
}

/// Learned-cascade pruning over the projection distance: at each stage
/// checkpoint, evaluates that stage's classifier on `(dis', tau)` and
/// prunes on a label-1 prediction. Candidates surviving all stages get the
/// exact distance (bit-identical to [`dco_exact`] under the same context).
///
/// Panics if a stage checkpoint is not one of the context's checkpoints or
/// if a stage classifier expects extra features.
pub fn dco_learned_proj(
    x_rot: &[f32],
    ctx: &QueryContext,
    x_norm2: f32,
    tau: f32,
    cascade: &Cascade,
) -> DcoResult {
    let dim = x_rot.len();
    debug_assert_eq!(dim, ctx.q_rot.len());
    for (d, clf) in &cascade.stages {
        assert!(
            *d < dim && ctx.checkpoints.binary_search(d).is_ok(),
            "cascade stage checkpoint does not align with the query context"
        );
        assert!(
            clf.extra_weights.is_empty(),
            "projection-cascade classifiers take no extra features"
        );
    }
    let c1 = x_norm2 + ctx.q_norm2;
    let mut c2 = 0.0f32;
    let mut prev = 0usize;
    let mut stage = 0usize;
    let last = ctx.checkpoints.len() - 1;
    for (j, &cp) in ctx.checkpoints.iter().enumerate() {
        c2 += 2.0 * vecmath::dot(&x_rot[prev..cp], &ctx.q_rot[prev..cp]);
        prev = cp;
        let dis = c1 - c2;
        if j == last {
            let pruned = tau >= 0.0 && dis > tau;
            return DcoResult {
                pruned,
                distance: dis,
                dims_scanned: dim as u32,
                used_exact: !pruned,
            };
        }
        if stage < cascade.stages.len() && cascade.stages[stage].0 == cp {
            let clf = &cascade.stages[stage].1;
            stage += 1;
            if tau >= 0.0 && clf.predict(dis, tau, &[]) {
                return DcoResult {
                    pruned: true,
                    distance: dis,
                    dims_scanned: cp as u32,
                    used_exact: false,
                };
            }
        }
    }
    unreachable!("checkpoints always end at the full dimension")
}

/// Learned pruning over the asymmetric quantized distance: evaluates the
/// classifier on `(adc(lut, code), tau, resid_feat)`; a label-1 prediction
/// prunes with zero vector dimensions scanned (the search layer counts the
/// table lookups), otherwise the exact distance is computed on the raw
/// vectors.
///
/// Panics if the classifier does not take exactly one extra feature.
pub fn dco_learned_quant(
    code: &[u16],
    lut: &LookupTable,
    resid_feat: f32,
    tau: f32,
    clf: &LinearClassifier,
    x_raw: &[f32],
    q_raw: &[f32],
) -> DcoResult {
    assert_eq!(
        clf.extra_weights.len(),
        1,
        "quantized classifier takes exactly one extra feature (the residual)"
    );
    debug_assert_eq!(x_raw.len(), q_raw.len());
    let dis_prime = adc(lut, code);
    if tau >= 0.0 && clf.predict(dis_prime, tau, &[resid_feat]) {
        return DcoResult {
            pruned: true,
            distance: dis_prime,
            dims_scanned: 0,
            used_exact: false,
        };
    }
    DcoResult {
        pruned: false,
        distance: vecmath::l2_sq_fast(x_raw, q_raw),
        dims_scanned: x_raw.len() as u32,
        used_exact: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::learn::{Cascade, LinearClassifier};
    use crate::quant::{build_lut, pq_encode, pq_train};
    use crate::synth::{gen_synthetic, SynthKind};
    use crate::transform::{fit_pca, fit_random_rotor, identity_rotor, make_query_context};
    use crate::vecmath;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const NOT_FULL: f32 = -1.0;

    /// Integer-valued vectors keep every summation order exact in f32, so
    /// the self-distance comes out exactly zero.
    #[test]
    fn exact_self_distance_is_zero() {
        let x = [3.0f32, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let rotor = identity_rotor(8);
        let ctx = make_query_context(&rotor, &x, 4).unwrap();
        let norm = vecmath::l2_sq(&x, rotor.mean());
        let r = dco_exact(&x, &ctx, norm);
        assert!(!r.pruned);
        assert!(r.used_exact);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.dims_scanned, 8);
    }

    #[test]
    fn exact_matches_direct_sum_oracle() {
        let data = gen_synthetic(SynthKind::Anisotropic { ratio: 0.9 }, 200, 24, 1);
        let queries = gen_synthetic(SynthKind::Anisotropic { ratio: 0.9 }, 10, 24, 2);
        let rotor = fit_pca(&data, 200, 3).unwrap();
        let rotated = rotor.apply_dataset(&data);
        let norms = crate::transform::norms2(&data, &rotor).unwrap();
        for qi in 0..queries.len() {
            let q = queries.row(qi);
            let ctx = make_query_context(&rotor, q, 8).unwrap();
            for i in 0..data.len() {
                let r = dco_exact(rotated.row(i), &ctx, norms[i]);
                // Direct per-dimension sum on the raw vectors.
                let direct: f32 = data
                    .row(i)
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let rel = (r.distance - direct).abs() / direct.max(1e-6);
                assert!(rel < 1e-4, "row {i}: {} vs {direct}", r.distance);
            }
        }
    }

    /// Shared fixture: PCA rotor over anisotropic data plus rotated rows.
    fn fixture(dim: usize, delta_d: usize) -> (Dataset, Vec<f32>, crate::transform::Rotor, usize) {
        let data = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 500, dim, 7);
        let rotor = fit_pca(&data, 500, 8).unwrap();
        let norms = crate::transform::norms2(&data, &rotor).unwrap();
        (data, norms, rotor, delta_d)
    }

    #[test]
    fn bsa_at_full_dim_is_bitwise_exact() {
        let (data, norms, rotor, _) = fixture(16, 16);
        let rotated = rotor.apply_dataset(&data);
        let queries = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 5, 16, 9);
        for qi in 0..queries.len() {
            // Stride = D: a single checkpoint at the full dimension, shared
            // by both operators.
            let ctx = make_query_context(&rotor, queries.row(qi), 16).unwrap();
            for i in 0..data.len() {
                let e = dco_exact(rotated.row(i), &ctx, norms[i]);
                for &tau in &[0.5f32, e.distance, e.distance * 2.0] {
                    let b = dco_bsa_res(rotated.row(i), &ctx, norms[i], tau, 8.0, 16);
                    assert_eq!(b.distance.to_bits(), e.distance.to_bits());
                    assert_eq!(b.pruned, e.distance > tau);
                }
            }
        }
    }

    #[test]
    fn negative_tau_never_prunes_in_any_operator() {
        let (data, norms, rotor, delta_d) = fixture(16, 4);
        let rotated = rotor.apply_dataset(&data);
        let q = gen_synthetic(SynthKind::Isotropic, 1, 16, 10);
        let ctx = make_query_context(&rotor, q.row(0), delta_d).unwrap();
        let cascade = Cascade {
            stages: vec![(
                4,
                LinearClassifier {
                    m1: 1.0,
                    extra_weights: Vec::new(),
                    beta: 1000.0, // would prune everything if tau were live
                },
            )],
            delta_d,
            target_recall: 0.99,
            stage_recalls: vec![0.99],
        };
        for i in 0..50 {
            let x = rotated.row(i);
            assert!(!dco_bsa_res(x, &ctx, norms[i], NOT_FULL, 0.0, 4).pruned);
            assert!(!dco_bsa_res_incremental(x, &ctx, norms[i], NOT_FULL, 0.0, 4).pruned);
            assert!(!dco_ads(x, &ctx, norms[i], NOT_FULL, 0.01, 4).pruned);
            assert!(!dco_learned_proj(x, &ctx, norms[i], NOT_FULL, &cascade).pruned);
        }
    }

    #[test]
    fn bsa_prunes_far_candidates_and_reports_partial_scan() {
        let (data, norms, rotor, _) = fixture(16, 8);
        let rotated = rotor.apply_dataset(&data);
        let q = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 1, 16, 11);
        let ctx = make_query_context(&rotor, q.row(0), 8).unwrap();
        // Tiny tau: essentially everything is prunable.
        let tau = 1e-3f32;
        let mut saw_prune = false;
        for i in 0..data.len() {
            let r = dco_bsa_res(rotated.row(i), &ctx, norms[i], tau, 3.0, 8);
            if r.pruned {
                saw_prune = true;
                assert_eq!(r.dims_scanned, 8);
                assert!(!r.used_exact);
                // Approximate distance is C1 - C2 at the checkpoint.
                let c1 = norms[i] + ctx.q_norm2;
                let c2 = 2.0 * vecmath::dot(&rotated.row(i)[..8], &ctx.q_rot[..8]);
                assert_eq!(r.distance.to_bits(), (c1 - c2).to_bits());
            } else {
                assert_eq!(r.dims_scanned, 16);
                assert!(r.used_exact);
            }
        }
        assert!(saw_prune);
    }

    #[test]
    fn incremental_kept_path_is_bitwise_identical_to_exact() {
        let (data, norms, rotor, delta_d) = fixture(24, 8);
        let rotated = rotor.apply_dataset(&data);
        let queries = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 4, 24, 12);
        for qi in 0..queries.len() {
            let ctx = make_query_context(&rotor, queries.row(qi), delta_d).unwrap();
            for i in 0..data.len() {
                let e = dco_exact(rotated.row(i), &ctx, norms[i]);
                // Huge tau: nothing prunes, every candidate runs the full
                // incremental scan.
                let r =
                    dco_bsa_res_incremental(rotated.row(i), &ctx, norms[i], 1e12, 8.0, delta_d);
                assert!(!r.pruned);
                assert_eq!(r.distance.to_bits(), e.distance.to_bits());
                // Same for the learned path with no live stages.
                let cascade = Cascade {
                    stages: Vec::new(),
                    delta_d,
                    target_recall: 1.0,
                    stage_recalls: Vec::new(),
                };
                let l = dco_learned_proj(rotated.row(i), &ctx, norms[i], 1e12, &cascade);
                assert_eq!(l.distance.to_bits(), e.distance.to_bits());
            }
        }
    }

    #[test]
    fn incremental_final_checkpoint_decision_is_exact() {
        let (data, norms, rotor, delta_d) = fixture(16, 8);
        let rotated = rotor.apply_dataset(&data);
        let q = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 1, 16, 13);
        let ctx = make_query_context(&rotor, q.row(0), delta_d).unwrap();
        for i in 0..data.len() {
            let e = dco_exact(rotated.row(i), &ctx, norms[i]);
            // m = 0: the margin test is dis' > tau at every checkpoint; a
            // candidate reaching the final checkpoint gets the exact rule.
            let r = dco_bsa_res_incremental(rotated.row(i), &ctx, norms[i], e.distance, 0.0, 8);
            if r.dims_scanned == 16 {
                // tau == exact distance: not strictly greater, never pruned.
                assert!(!r.pruned);
                assert_eq!(r.distance.to_bits(), e.distance.to_bits());
            }
        }
    }

    #[test]
    fn ads_final_checkpoint_is_exact_and_prunes_far_points() {
        let dim = 32;
        let data = gen_synthetic(SynthKind::Isotropic, 400, dim, 14);
        let rotor = fit_random_rotor(dim, 15);
        let rotated = rotor.apply_dataset(&data);
        let norms = crate::transform::norms2(&data, &rotor).unwrap();
        let q = gen_synthetic(SynthKind::Isotropic, 1, dim, 16);
        let ctx = make_query_context(&rotor, q.row(0), 8).unwrap();
        let q_rot = &ctx.q_rot;

        let mut pruned = 0usize;
        for i in 0..data.len() {
            let x = rotated.row(i);
            let exact = vecmath::l2_sq(x, q_rot);
            let r = dco_ads(x, &ctx, norms[i], exact * 0.25, 2.1, 8);
            if r.pruned {
                pruned += 1;
                assert!(r.dims_scanned <= dim as u32);
            }
            // Survivors carry the exact distance.
            let kept = dco_ads(x, &ctx, norms[i], exact * 4.0, 2.1, 8);
            assert!(!kept.pruned);
            let rel = (kept.distance - exact).abs() / exact.max(1e-6);
            assert!(rel < 1e-4);
            assert_eq!(kept.dims_scanned, dim as u32);
        }
        // tau at a quarter of the true distance: most candidates exceed the
        // inflated threshold at some checkpoint.
        assert!(pruned > 200, "only {pruned} pruned");
    }

    #[test]
    fn ads_false_prune_rate_is_small_at_reference_epsilon() {
        let dim = 64;
        let data = gen_synthetic(SynthKind::Isotropic, 2000, dim, 17);
        let rotor = fit_random_rotor(dim, 18);
        let rotated = rotor.apply_dataset(&data);
        let norms = crate::transform::norms2(&data, &rotor).unwrap();
        let queries = gen_synthetic(SynthKind::Isotropic, 5, dim, 19);
        let mut false_prunes = 0usize;
        let mut calls = 0usize;
        for qi in 0..queries.len() {
            let ctx = make_query_context(&rotor, queries.row(qi), 16).unwrap();
            // tau near the median distance: half the candidates are "close".
            let mut dists: Vec<f32> = (0..data.len())
                .map(|i| vecmath::l2_sq(rotated.row(i), &ctx.q_rot))
                .collect();
            dists.sort_by(f32::total_cmp);
            let tau = dists[dists.len() / 2];
            for i in 0..data.len() {
                let exact = vecmath::l2_sq(rotated.row(i), &ctx.q_rot);
                let r = dco_ads(rotated.row(i), &ctx, norms[i], tau, 2.1, 16);
                calls += 1;
                if r.pruned && exact <= tau {
                    false_prunes += 1;
                }
            }
        }
        let rate = false_prunes as f64 / calls as f64;
        assert!(rate <= 0.01, "false-prune rate {rate}");
    }

    #[test]
    fn single_stage_cascade_matches_bsa_at_the_shared_checkpoint() {
        let (data, norms, rotor, delta_d) = fixture(16, 8);
        let rotated = rotor.apply_dataset(&data);
        let queries = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 3, 16, 20);
        let m = 8.0f32;
        for qi in 0..queries.len() {
            let ctx = make_query_context(&rotor, queries.row(qi), delta_d).unwrap();
            let sigma = ctx.sigma_suffix[0];
            let cascade = Cascade {
                stages: vec![(
                    8,
                    LinearClassifier {
                        m1: 1.0,
                        extra_weights: Vec::new(),
                        beta: -(m * sigma),
                    },
                )],
                delta_d,
                target_recall: 0.995,
                stage_recalls: vec![0.995],
            };
            for i in 0..data.len() {
                for &tau in &[0.1f32, 1.0, 10.0, 100.0] {
                    let b = dco_bsa_res(rotated.row(i), &ctx, norms[i], tau, m, 8);
                    let l = dco_learned_proj(rotated.row(i), &ctx, norms[i], tau, &cascade);
                    // With m1=1 and beta=-(m*sigma), the stage evaluates
                    // exactly the quantile-margin rule: `dis + (-(m*sigma))`
                    // and `dis - m*sigma` are the same IEEE operation.
                    assert_eq!(b.pruned, l.dims_scanned == 8, "row {i} tau {tau}");
                    if b.pruned {
                        assert!(l.pruned);
                        assert_eq!(b.distance.to_bits(), l.distance.to_bits());
                        assert_eq!(l.dims_scanned, 8);
                    } else {
                        // Both fall through to the full scan. The cascade's
                        // final checkpoint additionally applies the exact
                        // `dis > tau` test, which the fixed-dim operator's
                        // kept path does not repeat.
                        let e = dco_exact(rotated.row(i), &ctx, norms[i]);
                        assert_eq!(l.distance.to_bits(), e.distance.to_bits());
                        assert_eq!(l.pruned, e.distance > tau);
                        assert_eq!(l.dims_scanned, 16);
                    }
                }
            }
        }
    }

    #[test]
    fn learned_quant_trivial_centroid_case() {
        // Dataset of 2^nbits distinct integer vectors: every vector is its
        // own centroid, adc(query = member) = 0, and the exact fallback
        // returns 0 for the self-pair.
        let mut data = Dataset::empty(4);
        for _rep in 0..4 {
            for v in 0..4 {
                let b = (v * 2) as f32;
                data.push_row(&[b, -b, b + 1.0, 3.0 * b]);
            }
        }
        let cb = pq_train(&data, 2, 2, 0).unwrap();
        let clf = LinearClassifier {
            m1: 1.0,
            extra_weights: vec![1.0],
            beta: -0.5,
        };
        let v = data.row(1);
        let code = pq_encode(&cb, v);
        let lut = build_lut(&cb, v);
        assert_eq!(adc(&lut, &code), 0.0);
        let r = dco_learned_quant(&code, &lut, 0.0, 5.0, &clf, v, v);
        assert!(!r.pruned);
        assert_eq!(r.distance, 0.0);
        assert!(r.used_exact);
        assert_eq!(r.dims_scanned, 4);
    }

    #[test]
    fn learned_quant_prunes_on_label1_with_zero_dims() {
        let lut_cb = {
            let data = gen_synthetic(SynthKind::Isotropic, 64, 8, 21);
            pq_train(&data, 4, 3, 22).unwrap()
        };
        let x = gen_synthetic(SynthKind::Isotropic, 1, 8, 23);
        let q = gen_synthetic(SynthKind::Isotropic, 1, 8, 24);
        let code = pq_encode(&lut_cb, x.row(0));
        let lut = build_lut(&lut_cb, q.row(0));
        // Classifier that always predicts label 1 for positive distances.
        let clf = LinearClassifier {
            m1: 1.0,
            extra_weights: vec![0.0],
            beta: 1e9,
        };
        let r = dco_learned_quant(&code, &lut, 0.1, 1.0, &clf, x.row(0), q.row(0));
        assert!(r.pruned);
        assert_eq!(r.dims_scanned, 0);
        assert!(!r.used_exact);
        assert_eq!(r.distance, adc(&lut, &code));
    }

    #[test]
    fn false_prune_rate_shrinks_with_larger_multiplier() {
        // Gaussian data, tau at the true 10-NN radius per query: m = 3
        // keeps the false-prune rate within 1%, larger m within 0.05%.
        let dim = 64;
        let d = 32;
        let data = gen_synthetic(SynthKind::Isotropic, 3000, dim, 25);
        let rotor = fit_pca(&data, 3000, 26).unwrap();
        let rotated = rotor.apply_dataset(&data);
        let norms = crate::transform::norms2(&data, &rotor).unwrap();
        let queries = gen_synthetic(SynthKind::Isotropic, 10, dim, 27);
        let gt = crate::dataset::brute_force_knn(&data, &queries, 10).unwrap();

        for &(m, limit) in &[(3.0f32, 0.01f64), (8.0, 0.0005)] {
            let mut false_prunes = 0usize;
            let mut calls = 0usize;
            for qi in 0..queries.len() {
                let ctx = make_query_context(&rotor, queries.row(qi), d).unwrap();
                let tau = gt.dists_row(qi)[9];
                for i in 0..data.len() {
                    let r = dco_bsa_res(rotated.row(i), &ctx, norms[i], tau, m, d);
                    calls += 1;
                    let exact = dco_exact(rotated.row(i), &ctx, norms[i]).distance;
                    if r.pruned && exact <= tau {
                        false_prunes += 1;
                    }
                }
            }
            let rate = false_prunes as f64 / calls as f64;
            assert!(rate <= limit, "m = {m}: false-prune rate {rate} > {limit}");
        }
    }

    #[test]
    #[should_panic(expected = "checkpoints")]
    fn bsa_rejects_non_checkpoint_dim() {
        let rotor = identity_rotor(8);
        let q = [1.0f32; 8];
        let ctx = make_query_context(&rotor, &q, 4).unwrap();
        let x = [0.5f32; 8];
        let _ = dco_bsa_res(&x, &ctx, 2.0, 1.0, 3.0, 3);
    }

    #[test]
    fn random_tau_grid_decisions_match_margin_formula() {
        // Cross-check the prune decision against an independently computed
        // margin on random inputs.
        let (data, norms, rotor, _) = fixture(16, 4);
        let rotated = rotor.apply_dataset(&data);
        let q = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 1, 16, 28);
        let ctx = make_query_context(&rotor, q.row(0), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for i in 0..data.len() {
            let x = rotated.row(i);
            let tau: f32 = rng.gen_range(0.0..50.0);
            let m: f32 = rng.gen_range(0.0..12.0);
            let r = dco_bsa_res(x, &ctx, norms[i], tau, m, 4);
            let c1 = norms[i] + ctx.q_norm2;
            let c2 = 2.0 * vecmath::dot(&x[..4], &ctx.q_rot[..4]);
            let expect = (c1 - c2) - m * ctx.sigma_suffix[0] > tau;
            assert_eq!(r.pruned, expect, "row {i}");
        }
    }
}
