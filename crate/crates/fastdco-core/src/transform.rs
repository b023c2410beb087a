//! Orthogonal transforms and per-query pruning contexts.
//!
//! A [`Rotor`] bundles an orthogonal matrix `R` (rows are projection
//! directions), a centering vector `mean`, and the per-rotated-dimension
//! variances `sigma2`. Applying it maps `v` to `R · (v - mean)`; squared
//! Euclidean distances are preserved exactly, which is what lets every
//! downstream operator work in rotated coordinates.
//!
//! For a query `q` the squared distance to a data vector `x` decomposes as
//!
//! ```text
//! ||x - q||^2 = (||x||^2 + ||q||^2) - 2<x_d, q_d> - 2<x_r, q_r>
//!                = C1 - C2 - C3
//! ```
//!
//! where `x_d`/`q_d` are the first `d` rotated coordinates and `x_r`/`q_r`
//! the remaining ones. `C1` is precomputable, `C2` costs `O(d)`, and the
//! unscanned tail `-C3` is a zero-mean error whose variance over the data
//! distribution is `4 * sum_{i >= d} q_i^2 * sigma2_i`. A [`QueryContext`]
//! precomputes the square root of that quantity at every scan checkpoint so
//! pruning tests can price the tail at quantile `m` in O(1).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::vecmath;

/// How a rotor was produced; pruning guarantees differ per kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotorKind {
    /// Principal components of a data sample, variance-sorted descending.
    Pca,
    /// A seeded random orthogonal matrix (Johnson–Lindenstrauss style).
    Random,
    /// The identity; useful for tests and for data that is already rotated.
    Identity,
}

/// An orthogonal change of basis with centering and per-dimension variances.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotor {
    dim: usize,
    kind: RotorKind,
    /// Row-major `dim x dim`; row `i` is the `i`-th projection direction.
    r: Vec<f32>,
    mean: Vec<f32>,
    /// Variance of rotated dimension `i` over the fitting data. Eigenvalues
    /// for PCA; zeros for rotors that were never measured against data.
    sigma2: Vec<f32>,
}

impl Rotor {
    /// Assembles a rotor from raw parts (used by deserialization).
    /// Panics on inconsistent lengths.
    pub fn from_parts(
        dim: usize,
        kind: RotorKind,
        r: Vec<f32>,
        mean: Vec<f32>,
        sigma2: Vec<f32>,
    ) -> Self {
        assert!(dim > 0);
        assert_eq!(r.len(), dim * dim, "rotation matrix size mismatch");
        assert_eq!(mean.len(), dim, "mean length mismatch");
        assert_eq!(sigma2.len(), dim, "sigma2 length mismatch");
        Rotor {
            dim,
            kind,
            r,
            mean,
            sigma2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> RotorKind {
        self.kind
    }

    /// Row `i` of the rotation matrix.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.r[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[f32] {
        &self.r
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }

    pub fn sigma2(&self) -> &[f32] {
        &self.sigma2
    }

    /// Replaces the stored variances (e.g. with `measure_sigma2` output).
    pub fn set_sigma2(&mut self, sigma2: Vec<f32>) {
        assert_eq!(sigma2.len(), self.dim);
        self.sigma2 = sigma2;
    }

    /// `R · (v - mean)`.
    pub fn apply(&self, v: &[f32]) -> Vec<f32> {
        apply(self, v)
    }

    /// Rotates every row of a dataset.
    pub fn apply_dataset(&self, data: &Dataset) -> Dataset {
        assert_eq!(data.dim(), self.dim, "dataset dimension mismatch");
        let mut out = Vec::with_capacity(data.len() * self.dim);
        for row in data.rows() {
            out.extend_from_slice(&apply(self, row));
        }
        Dataset::from_vec(self.dim, out)
    }

    /// Max absolute entry of `R^T R - I`; small for a healthy rotor.
    pub fn orthogonality_defect(&self) -> f32 {
        let d = self.dim;
        let mut worst = 0.0f32;
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0f64;
                // Column i dot column j.
                for k in 0..d {
                    acc += self.r[k * d + i] as f64 * self.r[k * d + j] as f64;
                }
                let target = if i == j { 1.0 } else { 0.0 };
                let defect = (acc - target).abs() as f32;
                if defect > worst {
                    worst = defect;
                }
            }
        }
        worst
    }
}

/// Per-query state consumed by the distance-computation operators.
#[derive(Clone, Debug)]
pub struct QueryContext {
    /// The rotated, centered query.
    pub q_rot: Vec<f32>,
    /// `||q - mean||^2`, the query half of the `C1` term.
    pub q_norm2: f32,
    /// Scan checkpoints: `delta_d, 2*delta_d, ...`, always ending exactly
    /// at the full dimension (the last block may be short).
    pub checkpoints: Vec<usize>,
    /// Residual-error standard deviation at each checkpoint:
    /// `sqrt(4 * sum_{i >= d} q_rot[i]^2 * sigma2[i])`. Zero at `d = D`.
    pub sigma_suffix: Vec<f32>,
    /// The rotor kind this context was built from (operators that assume a
    /// particular transform can verify it).
    pub rotor_kind: RotorKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransformError {
    EmptyDataset,
    DimMismatch { expected: usize, got: usize },
    ZeroSampleSize,
    ZeroDeltaD,
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::EmptyDataset => write!(f, "cannot fit a transform on an empty dataset"),
            TransformError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            TransformError::ZeroSampleSize => write!(f, "sample size must be positive"),
            TransformError::ZeroDeltaD => write!(f, "checkpoint stride delta_d must be positive"),
        }
    }
}

impl core::error::Error for TransformError {}

/// Fits a PCA rotor on a uniform sample of the dataset (without
/// replacement, capped at the dataset size). Rows of the result are
/// eigenvectors of the sample covariance sorted by descending eigenvalue;
/// `sigma2` holds the eigenvalues, clamped at zero.
pub fn fit_pca(data: &Dataset, sample_size: usize, seed: u64) -> Result<Rotor, TransformError> {
    if data.is_empty() {
        return Err(TransformError::EmptyDataset);
    }
    if sample_size == 0 {
        return Err(TransformError::ZeroSampleSize);
    }
    let d = data.dim();
    let n = data.len();
    let m = sample_size.min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<usize> = if m == n {
        (0..n).collect()
    } else {
        let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();
        idx
    };

    // Mean and covariance in f64; population normalization (1/m) so that
    // eigenvalues equal the second moments `measure_sigma2` reports on the
    // same sample.
    let mut mean = vec![0.0f64; d];
    for &i in &sample {
        for (a, &v) in mean.iter_mut().zip(data.row(i)) {
            *a += v as f64;
        }
    }
    let inv_m = 1.0 / m as f64;
    for a in mean.iter_mut() {
        *a *= inv_m;
    }

    let mut cov = vec![0.0f64; d * d];
    let mut centered = vec![0.0f64; d];
    for &i in &sample {
        for (c, (&v, &mu)) in centered.iter_mut().zip(data.row(i).iter().zip(&mean)) {
            *c = v as f64 - mu;
        }
        for a in 0..d {
            let ca = centered[a];
            // Upper triangle only; mirrored below.
            for b in a..d {
                cov[a * d + b] += ca * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] * inv_m;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }

    let eig = DMatrix::from_row_slice(d, d, &cov).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut r = vec![0.0f32; d * d];
    let mut sigma2 = vec![0.0f32; d];
    for (row, &k) in order.iter().enumerate() {
        sigma2[row] = eig.eigenvalues[k].max(0.0) as f32;
        let col = eig.eigenvectors.column(k);
        for j in 0..d {
            r[row * d + j] = col[j] as f32;
        }
    }

    Ok(Rotor {
        dim: d,
        kind: RotorKind::Pca,
        r,
        mean: mean.into_iter().map(|v| v as f32).collect(),
        sigma2,
    })
}

/// A seeded random orthogonal rotor (QR of a Gaussian matrix). `mean` is
/// zero and `sigma2` is zero until measured against data.
pub fn fit_random_rotor(dim: usize, seed: u64) -> Rotor {
    assert!(dim > 0, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| normal.sample(&mut rng));
    let q = g.qr().q();
    let mut r = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            r.push(q[(i, j)] as f32);
        }
    }
    Rotor {
        dim,
        kind: RotorKind::Random,
        r,
        mean: vec![0.0; dim],
        sigma2: vec![0.0; dim],
    }
}

/// The identity rotor (no centering, unit directions, zero variances).
pub fn identity_rotor(dim: usize) -> Rotor {
    assert!(dim > 0, "dimension must be positive");
    let mut r = vec![0.0f32; dim * dim];
    for i in 0..dim {
        r[i * dim + i] = 1.0;
    }
    Rotor {
        dim,
        kind: RotorKind::Identity,
        r,
        mean: vec![0.0; dim],
        sigma2: vec![0.0; dim],
    }
}

/// `R · (v - mean)`. Panics if `v` has the wrong length.
pub fn apply(rotor: &Rotor, v: &[f32]) -> Vec<f32> {
    assert_eq!(v.len(), rotor.dim, "vector dimension mismatch");
    let centered = vecmath::sub(v, &rotor.mean);
    let mut out = Vec::with_capacity(rotor.dim);
    for i in 0..rotor.dim {
        out.push(vecmath::dot(rotor.row(i), &centered));
    }
    out
}

/// Empirical variance of every rotated dimension over a dataset.
pub fn measure_sigma2(rotor: &Rotor, data: &Dataset) -> Result<Vec<f32>, TransformError> {
    if data.is_empty() {
        return Err(TransformError::EmptyDataset);
    }
    if data.dim() != rotor.dim {
        return Err(TransformError::DimMismatch {
            expected: rotor.dim,
            got: data.dim(),
        });
    }
    let d = rotor.dim;
    let n = data.len() as f64;
    let mut sum = vec![0.0f64; d];
    let mut sum_sq = vec![0.0f64; d];
    for row in data.rows() {
        let y = apply(rotor, row);
        for i in 0..d {
            sum[i] += y[i] as f64;
            sum_sq[i] += y[i] as f64 * y[i] as f64;
        }
    }
    Ok((0..d)
        .map(|i| {
            let mu = sum[i] / n;
            ((sum_sq[i] / n - mu * mu).max(0.0)) as f32
        })
        .collect())
}

/// Scan checkpoints for dimension `dim` and stride `delta_d`: multiples of
/// the stride, with a final (possibly short) checkpoint exactly at `dim`.
pub fn checkpoints(dim: usize, delta_d: usize) -> Result<Vec<usize>, TransformError> {
    if delta_d == 0 {
        return Err(TransformError::ZeroDeltaD);
    }
    let mut cps = Vec::new();
    let mut d = delta_d;
    while d < dim {
        cps.push(d);
        d += delta_d;
    }
    cps.push(dim);
    Ok(cps)
}

/// Builds the per-query state: rotated query, its squared norm, the scan
/// checkpoints, and the residual-error std at each checkpoint.
pub fn make_query_context(
    rotor: &Rotor,
    q: &[f32],
    delta_d: usize,
) -> Result<QueryContext, TransformError> {
    if q.len() != rotor.dim {
        return Err(TransformError::DimMismatch {
            expected: rotor.dim,
            got: q.len(),
        });
    }
    let cps = checkpoints(rotor.dim, delta_d)?;
    let q_rot = apply(rotor, q);
    let q_norm2 = vecmath::norm_sq(&q_rot);

    // Backward pass: suffix[i] = 4 * sum_{j >= i} q_j^2 sigma2_j, then read
    // off the value at each checkpoint. The final checkpoint (d = D) has an
    // empty suffix, hence exactly zero.
    let d = rotor.dim;
    let mut suffix = vec![0.0f64; d + 1];
    for i in (0..d).rev() {
        let q2 = q_rot[i] as f64 * q_rot[i] as f64;
        suffix[i] = suffix[i + 1] + 4.0 * q2 * rotor.sigma2[i] as f64;
    }
    let sigma_suffix = cps
        .iter()
        .map(|&cp| libm::sqrt(suffix[cp]) as f32)
        .collect();

    Ok(QueryContext {
        q_rot,
        q_norm2,
        checkpoints: cps,
        sigma_suffix,
        rotor_kind: rotor.kind,
    })
}

/// `||x - mean||^2` for every vector; rotation-invariant, so this is the
/// stored-norm (`C1`) ingredient for rotated-space distance decomposition.
pub fn norms2(data: &Dataset, rotor: &Rotor) -> Result<Vec<f32>, TransformError> {
    if data.dim() != rotor.dim {
        return Err(TransformError::DimMismatch {
            expected: rotor.dim,
            got: data.dim(),
        });
    }
    Ok(data
        .rows()
        .map(|row| vecmath::l2_sq(row, &rotor.mean))
        .collect())
}
