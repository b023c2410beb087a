//! Property-based checks across the core crate: rotation isometry, operator
//! safety contracts, calibration monotonicity, k-means sanity, and packed
//! code round-trips, each over randomized inputs.

use fastdco_core::dataset::Dataset;
use fastdco_core::dco::{
    dco_ads, dco_bsa_res, dco_bsa_res_incremental, dco_exact, dco_learned_proj,
};
use fastdco_core::learn::{label0_recall, Cascade, LabeledSample, LinearClassifier};
use fastdco_core::quant::{kmeans, PackedCodes};
use fastdco_core::transform::{
    checkpoints, fit_pca, fit_random_rotor, make_query_context, norms2,
};
use fastdco_core::vecmath;
use proptest::prelude::*;

fn dataset_strategy(
    max_n: usize,
    max_dim: usize,
) -> impl Strategy<Value = (Dataset, Vec<f32>)> {
    (2usize..=max_n, 2usize..=max_dim)
        .prop_flat_map(|(n, dim)| {
            (
                Just(n),
                Just(dim),
                proptest::collection::vec(-10.0f32..10.0, n * dim),
                proptest::collection::vec(-10.0f32..10.0, dim),
            )
        })
        .prop_map(|(_, dim, data, q)| (Dataset::from_vec(dim, data), q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// An orthogonal rotation preserves pairwise squared distances (the
    /// centering shift cancels between the two vectors).
    #[test]
    fn rotation_preserves_pairwise_distances((data, q) in dataset_strategy(24, 12), seed in 0u64..1000) {
        let rotor = fit_random_rotor(data.dim(), seed);
        let rotated = rotor.apply_dataset(&data);
        let q_rot = rotor.apply(&q);
        for i in 0..data.len() {
            let direct = vecmath::l2_sq(data.row(i), &q);
            let rot = vecmath::l2_sq(rotated.row(i), &q_rot);
            let tol = 1e-4 * (1.0 + direct.abs());
            prop_assert!((direct - rot).abs() <= tol, "row {i}: {direct} vs {rot}");
        }
    }

    /// Checkpoint layout: strictly increasing, stride `delta_d`, last == D.
    #[test]
    fn checkpoint_layout(dim in 1usize..300, delta_d in 1usize..64) {
        prop_assume!(delta_d <= dim);
        let cps = checkpoints(dim, delta_d).unwrap();
        prop_assert_eq!(*cps.last().unwrap(), dim);
        prop_assert_eq!(cps[0], delta_d.min(dim));
        for w in cps.windows(2) {
            prop_assert!(w[0] < w[1]);
            prop_assert!(w[1] - w[0] <= delta_d);
        }
        prop_assert_eq!(cps.len(), dim.div_ceil(delta_d));
    }

    /// Operator safety: kept results carry the exact distance (within
    /// decomposition rounding) and full scan counts; pruned results never
    /// occur with a negative threshold; dims_scanned never exceeds D.
    #[test]
    fn operator_contracts((data, q) in dataset_strategy(16, 16), tau in -1.0f32..200.0, seed in 0u64..500) {
        let dim = data.dim();
        let delta_d = 1 + (seed as usize % dim);
        let rotor = fit_pca(&data, data.len(), seed).unwrap();
        let random = fit_random_rotor(dim, seed);
        let ctx = make_query_context(&rotor, &q, delta_d).unwrap();
        let rctx = make_query_context(&random, &q, delta_d).unwrap();
        let rotated = rotor.apply_dataset(&data);
        let rrotated = random.apply_dataset(&data);
        let norms = norms2(&data, &rotor).unwrap();
        let rnorms = norms2(&data, &random).unwrap();
        let d_mid = ctx.checkpoints[ctx.checkpoints.len() / 2];
        let cascade = Cascade {
            stages: Vec::new(),
            delta_d,
            target_recall: 1.0,
            stage_recalls: Vec::new(),
        };

        for i in 0..data.len() {
            let exact = vecmath::l2_sq(rotated.row(i), &ctx.q_rot);
            let tol = 1e-4 * (1.0 + exact.abs());
            let results = [
                dco_exact(rotated.row(i), &ctx, norms[i]),
                dco_bsa_res(rotated.row(i), &ctx, norms[i], tau, 3.0, d_mid),
                dco_bsa_res_incremental(rotated.row(i), &ctx, norms[i], tau, 3.0, delta_d),
                dco_learned_proj(rotated.row(i), &ctx, norms[i], tau, &cascade),
            ];
            for (j, r) in results.iter().enumerate() {
                prop_assert!(r.dims_scanned as usize <= dim);
                if tau < 0.0 {
                    prop_assert!(!r.pruned, "operator {j} pruned at negative tau");
                }
                if !r.pruned {
                    prop_assert!(r.used_exact);
                    prop_assert_eq!(r.dims_scanned as usize, dim);
                    prop_assert!((r.distance - exact).abs() <= tol,
                        "operator {} kept distance {} vs exact {}", j, r.distance, exact);
                }
            }
            // ADS runs on the random rotor; its exact distance differs only
            // by that rotation.
            let rexact = vecmath::l2_sq(rrotated.row(i), &rctx.q_rot);
            let r = dco_ads(rrotated.row(i), &rctx, rnorms[i], tau, 2.1, delta_d);
            prop_assert!(r.dims_scanned as usize <= dim);
            if tau < 0.0 {
                prop_assert!(!r.pruned);
            }
            if !r.pruned {
                let rtol = 1e-4 * (1.0 + rexact.abs());
                prop_assert!((r.distance - rexact).abs() <= rtol);
            }
        }
    }

    /// Lowering beta can only widen the kept set: label-0 recall is
    /// non-increasing in beta on any finite sample set.
    #[test]
    fn beta_monotonicity(
        m1 in 0.25f32..4.0,
        samples in proptest::collection::vec((0.0f32..100.0, 0.0f32..100.0, -50.0f32..50.0), 1..60),
        betas in proptest::collection::vec(-100.0f32..100.0, 2..10),
    ) {
        let samples: Vec<LabeledSample> = samples
            .into_iter()
            .map(|(dis_prime, tau, shift)| {
                let exact_dis = (dis_prime + shift).max(0.0);
                LabeledSample {
                    dis_prime,
                    tau,
                    extras: Vec::new(),
                    label: exact_dis > tau,
                    exact_dis,
                }
            })
            .collect();
        prop_assume!(samples.iter().any(|s| !s.label));
        let mut betas = betas;
        betas.sort_by(f32::total_cmp);
        let mut prev = f64::INFINITY;
        for &beta in &betas {
            let clf = LinearClassifier {
                m1,
                extra_weights: Vec::new(),
                beta,
            };
            let r = label0_recall(&clf, &samples);
            prop_assert!(r <= prev + 1e-12, "recall rose from {prev} to {r} at beta {beta}");
            prev = r;
        }
    }

    /// k-means never worsens the trivial single-cluster objective, assigns
    /// every point to its genuinely nearest centroid, and is deterministic.
    #[test]
    fn kmeans_assignments_are_nearest(
        (data, _q) in dataset_strategy(40, 6),
        k in 1usize..5,
        seed in 0u64..100,
    ) {
        prop_assume!(k <= data.len());
        let flat: Vec<f32> = data.rows().flat_map(|r| r.iter().copied()).collect();
        let km = kmeans(&flat, data.dim(), k, 25, seed).unwrap();
        let again = kmeans(&flat, data.dim(), k, 25, seed).unwrap();
        prop_assert_eq!(&km.centroids, &again.centroids);
        let dim = data.dim();
        let mut recomputed = 0.0f64;
        for i in 0..data.len() {
            let mut best = 0u32;
            let mut best_d = f32::INFINITY;
            for c in 0..k {
                let d = vecmath::l2_sq(data.row(i), &km.centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            prop_assert_eq!(km.assignments[i], best, "point {}", i);
            recomputed += best_d as f64;
        }
        prop_assert!((km.objective - recomputed).abs() <= 1e-3 * (1.0 + recomputed));
    }

    /// Bit-packed codes survive a write/read cycle at every code width.
    #[test]
    fn packed_codes_round_trip(
        n in 1usize..20,
        m in 1usize..6,
        nbits in 1u8..=16,
        seed in 0u64..1000,
    ) {
        let mask = if nbits == 16 { u16::MAX } else { (1u16 << nbits) - 1 };
        // Cheap deterministic code stream.
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as u16) & mask
        };
        let mut packed = PackedCodes::new(n, m, nbits);
        let mut expect = vec![0u16; n * m];
        for i in 0..n {
            for s in 0..m {
                let v = next();
                expect[i * m + s] = v;
                packed.set(i, s, v);
            }
        }
        let mut buf = vec![0u16; m];
        for i in 0..n {
            packed.read_into(i, &mut buf);
            for s in 0..m {
                prop_assert_eq!(packed.get(i, s), expect[i * m + s]);
                prop_assert_eq!(buf[s], expect[i * m + s]);
            }
        }
        prop_assert_eq!(packed.bit_len(), n * m * nbits as usize);
    }
}
