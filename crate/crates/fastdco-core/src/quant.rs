//! Vector quantization: k-means, product quantization (PQ) and its
//! rotation-optimized variant (OPQ), with asymmetric-distance lookup tables.
//!
//! A [`Codebook`] splits the (optionally rotated) space into equal
//! subspaces and quantizes each with its own `2^nbits`-centroid k-means
//! codebook. The asymmetric distance between a raw query and an encoded
//! vector is the sum over subspaces of `||q_s - centroid_s||^2`, served from
//! a per-query [`LookupTable`] in one table read per subspace.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::transform::fit_pca;
use crate::vecmath;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuantError {
    EmptyInput,
    /// k must satisfy 1 <= k.
    BadK,
    /// nbits must lie in 1..=16.
    BadNbits,
    /// Dimension must divide evenly into the requested subspaces.
    SubspaceMismatch { dim: usize, num_subspaces: usize },
    DimMismatch { expected: usize, got: usize },
}

impl fmt::Display for QuantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantError::EmptyInput => write!(f, "input has no points"),
            QuantError::BadK => write!(f, "cluster count must be at least 1"),
            QuantError::BadNbits => write!(f, "nbits must lie in 1..=16"),
            QuantError::SubspaceMismatch {
                dim,
                num_subspaces,
            } => write!(
                f,
                "dimension {dim} is not divisible into {num_subspaces} subspaces"
            ),
            QuantError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl core::error::Error for QuantError {}

/// k-means output: centroids (k x dim row-major), the final assignment of
/// every input point, and the summed squared-distance objective.
#[derive(Clone, Debug)]
pub struct Kmeans {
    pub centroids: Vec<f32>,
    pub assignments: Vec<u32>,
    pub objective: f64,
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Deterministic in `(points, k, max_iters, seed)`. Ties in assignment go to
/// the lower centroid id. Clusters that lose all members are re-seeded from
/// the point currently farthest from its assigned centroid, so the
/// min-distance objective never increases between iterations. If there are
/// fewer distinct points than `k`, surplus centroids duplicate existing
/// points and the objective reaches zero.
pub fn kmeans(
    points: &[f32],
    dim: usize,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Kmeans, QuantError> {
    if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
        return Err(QuantError::EmptyInput);
    }
    if k == 0 {
        return Err(QuantError::BadK);
    }
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++: first centroid uniform, then proportional to the squared
    // distance to the nearest chosen centroid. When every remaining point
    // has distance zero (duplicates, or k > distinct points) the leftover
    // centroids cycle through the points deterministically.
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut best_d2: Vec<f64> = (0..n)
        .map(|i| vecmath::l2_sq_fast(row(i), row(first)) as f64)
        .collect();
    for c in 1..k {
        let total: f64 = best_d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in best_d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            c % n
        };
        centroids.extend_from_slice(row(pick));
        if total > 0.0 {
            for i in 0..n {
                let d = vecmath::l2_sq_fast(row(i), row(pick)) as f64;
                if d < best_d2[i] {
                    best_d2[i] = d;
                }
            }
        }
    }

    let mut assignments = vec![0u32; n];
    let mut first_pass = true;
    for _ in 0..max_iters {
        // Assignment step.
        let mut changed = false;
        for i in 0..n {
            let p = row(i);
            let mut best = 0u32;
            let mut best_d = f32::INFINITY;
            for c in 0..k {
                let d = vecmath::l2_sq_fast(p, &centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        if !changed && !first_pass {
            break;
        }
        first_pass = false;

        update_centroids(points, dim, k, &mut centroids, &assignments);
    }

    // Re-derive assignments and the objective against the final centroids
    // so the returned triple is self-consistent.
    let mut obj = 0.0f64;
    for i in 0..n {
        let p = row(i);
        let mut best_d = f32::INFINITY;
        let mut best = 0u32;
        for c in 0..k {
            let d = vecmath::l2_sq_fast(p, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best_d = d;
                best = c as u32;
            }
        }
        assignments[i] = best;
        obj += best_d as f64;
    }
    Ok(Kmeans {
        centroids,
        assignments,
        objective: obj,
    })
}

/// Mean-update step, with empty clusters re-seeded from the points farthest
/// from their assigned centroids (each empty cluster takes a distinct
/// point; ties go to the lower point id).
fn update_centroids(
    points: &[f32],
    dim: usize,
    k: usize,
    centroids: &mut [f32],
    assignments: &[u32],
) {
    let n = assignments.len();
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0u32; k];
    for i in 0..n {
        let c = assignments[i] as usize;
        counts[c] += 1;
        let s = &mut sums[c * dim..(c + 1) * dim];
        for (a, &v) in s.iter_mut().zip(row(i)) {
            *a += v as f64;
        }
    }
    let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let inv = 1.0 / counts[c] as f64;
        for j in 0..dim {
            centroids[c * dim + j] = (sums[c * dim + j] * inv) as f32;
        }
    }
    if !empties.is_empty() {
        // Rank points by distance to their (freshly updated) centroid.
        let mut far: Vec<(f32, usize)> = (0..n)
            .map(|i| {
                let c = assignments[i] as usize;
                (
                    vecmath::l2_sq_fast(row(i), &centroids[c * dim..(c + 1) * dim]),
                    i,
                )
            })
            .collect();
        far.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (slot, &c) in empties.iter().enumerate() {
            let src = far[slot.min(far.len() - 1)].1;
            centroids[c * dim..(c + 1) * dim].copy_from_slice(row(src));
        }
    }
}

/// Lloyd refinement from existing centroids (used by the OPQ outer loop so
/// each rotation update continues from the previous codebooks).
fn kmeans_refine(points: &[f32], dim: usize, centroids: &mut [f32], iters: usize) {
    let k = centroids.len() / dim;
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut assignments = vec![0u32; n];
    for _ in 0..iters {
        let mut changed = false;
        for i in 0..n {
            let p = row(i);
            let mut best = 0u32;
            let mut best_d = f32::INFINITY;
            for c in 0..k {
                let d = vecmath::l2_sq_fast(p, &centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        update_centroids(points, dim, k, centroids, &assignments);
        if !changed {
            break;
        }
    }
}

/// A product-quantization codebook: optional orthogonal pre-rotation plus
/// per-subspace centroid tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    dim: usize,
    num_subspaces: usize,
    nbits: u8,
    /// Row-major `dim x dim` orthogonal matrix; `None` means identity
    /// (plain PQ).
    rotation: Option<Vec<f32>>,
    /// `num_subspaces` blocks of `k * sub_dim` floats, `k = 1 << nbits`.
    centroids: Vec<f32>,
}

impl Codebook {
    pub fn from_parts(
        dim: usize,
        num_subspaces: usize,
        nbits: u8,
        rotation: Option<Vec<f32>>,
        centroids: Vec<f32>,
    ) -> Self {
        assert!(dim > 0 && num_subspaces > 0 && dim.is_multiple_of(num_subspaces));
        assert!((1..=16).contains(&nbits));
        if let Some(r) = &rotation {
            assert_eq!(r.len(), dim * dim);
        }
        let k = 1usize << nbits;
        assert_eq!(centroids.len(), num_subspaces * k * (dim / num_subspaces));
        Codebook {
            dim,
            num_subspaces,
            nbits,
            rotation,
            centroids,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    pub fn nbits(&self) -> u8 {
        self.nbits
    }

    /// Centroids per subspace.
    pub fn k(&self) -> usize {
        1usize << self.nbits
    }

    pub fn sub_dim(&self) -> usize {
        self.dim / self.num_subspaces
    }

    pub fn rotation(&self) -> Option<&[f32]> {
        self.rotation.as_deref()
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    /// Centroid `c` of subspace `s`.
    pub fn centroid(&self, s: usize, c: usize) -> &[f32] {
        let sd = self.sub_dim();
        let base = s * self.k() * sd + c * sd;
        &self.centroids[base..base + sd]
    }

    /// Applies the codebook rotation (identity when absent): `R · v`.
    /// No centering — quantization codebooks absorb any offset.
    pub fn rotate(&self, v: &[f32]) -> Vec<f32> {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        match &self.rotation {
            None => v.to_vec(),
            Some(r) => (0..self.dim)
                .map(|i| vecmath::dot(&r[i * self.dim..(i + 1) * self.dim], v))
                .collect(),
        }
    }

    /// Decodes a code back to its rotated-space reconstruction.
    pub fn reconstruct(&self, code: &[u16]) -> Vec<f32> {
        assert_eq!(code.len(), self.num_subspaces, "code length mismatch");
        let mut out = Vec::with_capacity(self.dim);
        for (s, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.centroid(s, c as usize));
        }
        out
    }
}

/// Bit-packed PQ codes for a whole dataset: exactly
/// `n * num_subspaces * nbits` logical bits, LSB-first within bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedCodes {
    n: usize,
    num_subspaces: usize,
    nbits: u8,
    data: Vec<u8>,
}

impl PackedCodes {
    pub fn new(n: usize, num_subspaces: usize, nbits: u8) -> Self {
        assert!((1..=16).contains(&nbits));
        let bits = n * num_subspaces * nbits as usize;
        PackedCodes {
            n,
            num_subspaces,
            nbits,
            data: vec![0u8; bits.div_ceil(8)],
        }
    }

    pub fn from_parts(n: usize, num_subspaces: usize, nbits: u8, data: Vec<u8>) -> Self {
        let bits = n * num_subspaces * nbits as usize;
        assert_eq!(data.len(), bits.div_ceil(8), "payload size mismatch");
        PackedCodes {
            n,
            num_subspaces,
            nbits,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    pub fn nbits(&self) -> u8 {
        self.nbits
    }

    /// Total logical size in bits (`n * num_subspaces * nbits` exactly).
    pub fn bit_len(&self) -> usize {
        self.n * self.num_subspaces * self.nbits as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    fn bit_base(&self, i: usize, s: usize) -> usize {
        (i * self.num_subspaces + s) * self.nbits as usize
    }

    pub fn set(&mut self, i: usize, s: usize, code: u16) {
        debug_assert!(i < self.n && s < self.num_subspaces);
        debug_assert!(self.nbits == 16 || code < (1 << self.nbits));
        let base = self.bit_base(i, s);
        for b in 0..self.nbits as usize {
            let bit = (code >> b) & 1;
            let pos = base + b;
            let mask = 1u8 << (pos % 8);
            if bit == 1 {
                self.data[pos / 8] |= mask;
            } else {
                self.data[pos / 8] &= !mask;
            }
        }
    }

    pub fn get(&self, i: usize, s: usize) -> u16 {
        debug_assert!(i < self.n && s < self.num_subspaces);
        let base = self.bit_base(i, s);
        let mut code = 0u16;
        for b in 0..self.nbits as usize {
            let pos = base + b;
            if self.data[pos / 8] & (1 << (pos % 8)) != 0 {
                code |= 1 << b;
            }
        }
        code
    }

    /// Full code of vector `i` written into `buf` (must have
    /// `num_subspaces` entries).
    pub fn read_into(&self, i: usize, buf: &mut [u16]) {
        debug_assert_eq!(buf.len(), self.num_subspaces);
        for (s, slot) in buf.iter_mut().enumerate() {
            *slot = self.get(i, s);
        }
    }
}

/// Per-query asymmetric-distance table: `table[s * k + c]` is the squared
/// distance from the query's subspace `s` slice to centroid `c`.
#[derive(Clone, Debug)]
pub struct LookupTable {
    num_subspaces: usize,
    k: usize,
    table: Vec<f32>,
}

impl LookupTable {
    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    #[inline]
    pub fn entry(&self, s: usize, c: usize) -> f32 {
        self.table[s * self.k + c]
    }
}

fn subspace_seed(seed: u64, s: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(s as u64 + 1))
}

/// Trains the per-subspace codebooks on a flat rotated buffer.
fn train_subspaces(
    data: &[f32],
    dim: usize,
    num_subspaces: usize,
    nbits: u8,
    iters: usize,
    seed: u64,
) -> Result<Vec<f32>, QuantError> {
    let n = data.len() / dim;
    let sd = dim / num_subspaces;
    let k = 1usize << nbits;
    let mut centroids = Vec::with_capacity(num_subspaces * k * sd);
    let mut sub = vec![0.0f32; n * sd];
    for s in 0..num_subspaces {
        for i in 0..n {
            sub[i * sd..(i + 1) * sd]
                .copy_from_slice(&data[i * dim + s * sd..i * dim + (s + 1) * sd]);
        }
        let km = kmeans(&sub, sd, k, iters, subspace_seed(seed, s))?;
        centroids.extend_from_slice(&km.centroids);
    }
    Ok(centroids)
}

fn check_pq_params(data: &Dataset, num_subspaces: usize, nbits: u8) -> Result<(), QuantError> {
    if data.is_empty() {
        return Err(QuantError::EmptyInput);
    }
    if !(1..=16).contains(&nbits) {
        return Err(QuantError::BadNbits);
    }
    if num_subspaces == 0 || !data.dim().is_multiple_of(num_subspaces) {
        return Err(QuantError::SubspaceMismatch {
            dim: data.dim(),
            num_subspaces,
        });
    }
    Ok(())
}

const KMEANS_ITERS: usize = 25;
const OPQ_REFINE_ITERS: usize = 5;
const OPQ_SAMPLE: usize = 65_536;

/// Plain product quantization: identity rotation, independent k-means per
/// subspace (`k = 2^nbits`, 25 Lloyd iterations).
pub fn pq_train(
    data: &Dataset,
    num_subspaces: usize,
    nbits: u8,
    seed: u64,
) -> Result<Codebook, QuantError> {
    check_pq_params(data, num_subspaces, nbits)?;
    let centroids = train_subspaces(
        data.as_slice(),
        data.dim(),
        num_subspaces,
        nbits,
        KMEANS_ITERS,
        seed,
    )?;
    Ok(Codebook {
        dim: data.dim(),
        num_subspaces,
        nbits,
        rotation: None,
        centroids,
    })
}

/// Optimized product quantization: alternates codebook refinement with an
/// orthogonal-Procrustes rotation update, starting from the data's PCA
/// rotation. Trains on a seeded sample of at most 65,536 vectors.
///
/// With `outer_iters = 1` this reduces to plain PQ on the PCA-rotated data.
/// The quantization objective is non-increasing across outer iterations:
/// codebook refinement is monotone for a fixed rotation (Lloyd), and the
/// rotation update minimizes the same objective for fixed codes.
pub fn opq_train(
    data: &Dataset,
    num_subspaces: usize,
    nbits: u8,
    outer_iters: usize,
    seed: u64,
) -> Result<Codebook, QuantError> {
    check_pq_params(data, num_subspaces, nbits)?;
    if outer_iters == 0 {
        return Err(QuantError::BadK);
    }
    let dim = data.dim();

    let sample = sample_rows(data, OPQ_SAMPLE, seed);
    let n = sample.len() / dim;

    // PCA directions of the sample as the starting rotation (applied
    // without centering; the codebooks absorb any offset).
    let sample_ds = Dataset::from_vec(dim, sample.clone());
    let pca = fit_pca(&sample_ds, n, seed).expect("sample is non-empty");
    let mut rotation: Vec<f32> = pca.matrix().to_vec();

    let rotate_all = |rot: &[f32], out: &mut Vec<f32>| {
        out.clear();
        for i in 0..n {
            let x = &sample[i * dim..(i + 1) * dim];
            for r in 0..dim {
                out.push(vecmath::dot(&rot[r * dim..(r + 1) * dim], x));
            }
        }
    };

    let mut rotated = Vec::with_capacity(n * dim);
    rotate_all(&rotation, &mut rotated);
    let mut centroids = train_subspaces(&rotated, dim, num_subspaces, nbits, KMEANS_ITERS, seed)?;

    let sd = dim / num_subspaces;
    let k = 1usize << nbits;
    let mut recon = vec![0.0f32; n * dim];
    for _ in 1..outer_iters {
        // Encode under the current rotation/codebooks.
        for i in 0..n {
            let y = &rotated[i * dim..(i + 1) * dim];
            let out = &mut recon[i * dim..(i + 1) * dim];
            for s in 0..num_subspaces {
                let ys = &y[s * sd..(s + 1) * sd];
                let mut best = 0usize;
                let mut best_d = f32::INFINITY;
                for c in 0..k {
                    let cent = &centroids[s * k * sd + c * sd..s * k * sd + (c + 1) * sd];
                    let d = vecmath::l2_sq_fast(ys, cent);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                out[s * sd..(s + 1) * sd]
                    .copy_from_slice(&centroids[s * k * sd + best * sd..s * k * sd + (best + 1) * sd]);
            }
        }

        // Procrustes: R = V U^T for SVD(sum_i x_i y_i^T) = U S V^T, the
        // orthogonal minimizer of sum ||R x_i - y_i||^2 with codes fixed.
        let mut m = vec![0.0f64; dim * dim];
        for i in 0..n {
            let x = &sample[i * dim..(i + 1) * dim];
            let y = &recon[i * dim..(i + 1) * dim];
            for a in 0..dim {
                let xa = x[a] as f64;
                let mrow = &mut m[a * dim..(a + 1) * dim];
                for b in 0..dim {
                    mrow[b] += xa * y[b] as f64;
                }
            }
        }
        let svd = DMatrix::from_row_slice(dim, dim, &m).svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let r_new = v_t.transpose() * u.transpose();
        for a in 0..dim {
            for b in 0..dim {
                rotation[a * dim + b] = r_new[(a, b)] as f32;
            }
        }

        rotate_all(&rotation, &mut rotated);
        for s in 0..num_subspaces {
            let sub = gather_subspace(&rotated, dim, sd, s);
            let mut cents = centroids[s * k * sd..(s + 1) * k * sd].to_vec();
            kmeans_refine(&sub, sd, &mut cents, OPQ_REFINE_ITERS);
            centroids[s * k * sd..(s + 1) * k * sd].copy_from_slice(&cents);
        }
    }

    Ok(Codebook {
        dim,
        num_subspaces,
        nbits,
        rotation: Some(rotation),
        centroids,
    })
}

fn gather_subspace(rotated: &[f32], dim: usize, sd: usize, s: usize) -> Vec<f32> {
    let n = rotated.len() / dim;
    let mut sub = Vec::with_capacity(n * sd);
    for i in 0..n {
        sub.extend_from_slice(&rotated[i * dim + s * sd..i * dim + (s + 1) * sd]);
    }
    sub
}

/// Uniform sample (without replacement) of at most `cap` rows, flattened.
pub(crate) fn sample_rows(data: &Dataset, cap: usize, seed: u64) -> Vec<f32> {
    let n = data.len();
    if n <= cap {
        return data.as_slice().to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    let mut out = Vec::with_capacity(cap * data.dim());
    for i in idx {
        out.extend_from_slice(data.row(i));
    }
    out
}

/// Encodes one vector: rotate, then per subspace pick the nearest centroid
/// (ties to the lower centroid id).
pub fn pq_encode(cb: &Codebook, v: &[f32]) -> Vec<u16> {
    let y = cb.rotate(v);
    let sd = cb.sub_dim();
    let mut code = Vec::with_capacity(cb.num_subspaces);
    for s in 0..cb.num_subspaces {
        let ys = &y[s * sd..(s + 1) * sd];
        let mut best = 0u16;
        let mut best_d = f32::INFINITY;
        for c in 0..cb.k() {
            let d = vecmath::l2_sq_fast(ys, cb.centroid(s, c));
            if d < best_d {
                best_d = d;
                best = c as u16;
            }
        }
        code.push(best);
    }
    code
}

/// Encodes a whole dataset into bit-packed codes.
pub fn pq_encode_dataset(cb: &Codebook, data: &Dataset) -> Result<PackedCodes, QuantError> {
    if data.dim() != cb.dim {
        return Err(QuantError::DimMismatch {
            expected: cb.dim,
            got: data.dim(),
        });
    }
    let mut packed = PackedCodes::new(data.len(), cb.num_subspaces, cb.nbits);
    for (i, row) in data.rows().enumerate() {
        for (s, &c) in pq_encode(cb, row).iter().enumerate() {
            packed.set(i, s, c);
        }
    }
    Ok(packed)
}

/// Builds the per-query distance table; `q` is given in the same space the
/// codebook was trained on (the codebook applies its own rotation).
pub fn build_lut(cb: &Codebook, q: &[f32]) -> LookupTable {
    let y = cb.rotate(q);
    let sd = cb.sub_dim();
    let k = cb.k();
    let mut table = Vec::with_capacity(cb.num_subspaces * k);
    for s in 0..cb.num_subspaces {
        let ys = &y[s * sd..(s + 1) * sd];
        for c in 0..k {
            table.push(vecmath::l2_sq(ys, cb.centroid(s, c)));
        }
    }
    LookupTable {
        num_subspaces: cb.num_subspaces,
        k,
        table,
    }
}

/// Asymmetric distance: one table lookup per subspace, summed in subspace
/// order (bit-identical to the naive per-subspace sum by construction).
#[inline]
pub fn adc(lut: &LookupTable, code: &[u16]) -> f32 {
    debug_assert_eq!(code.len(), lut.num_subspaces);
    let mut acc = 0.0f32;
    for (s, &c) in code.iter().enumerate() {
        acc += lut.entry(s, c as usize);
    }
    acc
}

/// Quantization residual `||rotate(v) - reconstruct(code)||^2`, the extra
/// feature the quantized pruning classifier conditions on.
pub fn code_residual(cb: &Codebook, v: &[f32], code: &[u16]) -> f32 {
    let y = cb.rotate(v);
    let sd = cb.sub_dim();
    let mut acc = 0.0f32;
    for (s, &c) in code.iter().enumerate() {
        acc += vecmath::l2_sq(&y[s * sd..(s + 1) * sd], cb.centroid(s, c as usize));
    }
    acc
}
