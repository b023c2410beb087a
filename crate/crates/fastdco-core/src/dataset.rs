//! In-memory vector collections and exact k-nearest-neighbor search.
//!
//! All distances in this crate are *squared* Euclidean; square roots are
//! never taken because every comparison (pruning thresholds, queue
//! admission, ground truth) is order-equivalent at the squared level.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::vecmath;

/// A dense row-major collection of `f32` vectors sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    data: Vec<f32>,
}

impl Dataset {
    /// Wraps a flat row-major buffer. Panics if `data.len()` is not a
    /// multiple of `dim` or `dim == 0`.
    pub fn from_vec(dim: usize, data: Vec<f32>) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert!(
            data.len().is_multiple_of(dim),
            "buffer length {} is not a multiple of dim {}",
            data.len(),
            dim
        );
        Dataset { dim, data }
    }

    /// An empty dataset of the given dimension, ready for `push_row`.
    pub fn empty(dim: usize) -> Self {
        Self::from_vec(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f32]) {
        assert_eq!(row.len(), self.dim, "row width mismatch");
        self.data.extend_from_slice(row);
    }

    /// Iterate rows in id order.
    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// The flat row-major buffer.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// True if every entry is finite (no NaN/Inf).
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Exact k-NN answers for a query set: `k` (id, squared distance) pairs per
/// query, ascending by distance with ties broken toward the lower id.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    k: usize,
    ids: Vec<u32>,
    dists: Vec<f32>,
}

impl GroundTruth {
    pub fn new(k: usize, ids: Vec<u32>, dists: Vec<f32>) -> Self {
        assert!(k > 0 && ids.len() == dists.len() && ids.len().is_multiple_of(k));
        GroundTruth { k, ids, dists }
    }

    /// Build from ids alone (distances unknown, e.g. loaded from disk).
    pub fn from_ids(k: usize, ids: Vec<u32>) -> Self {
        assert!(k > 0 && ids.len().is_multiple_of(k));
        let dists = alloc::vec![0.0; ids.len()];
        GroundTruth { k, ids, dists }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of queries covered.
    pub fn len(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Neighbor ids of query `q`, ascending by distance.
    pub fn ids_row(&self, q: usize) -> &[u32] {
        &self.ids[q * self.k..(q + 1) * self.k]
    }

    pub fn dists_row(&self, q: usize) -> &[f32] {
        &self.dists[q * self.k..(q + 1) * self.k]
    }

    pub fn all_ids(&self) -> &[u32] {
        &self.ids
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetError {
    /// The dataset has no vectors.
    Empty,
    /// Query dimension differs from dataset dimension.
    DimMismatch { data: usize, query: usize },
    /// Requested more neighbors than there are vectors.
    KTooLarge { k: usize, n: usize },
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::Empty => write!(f, "dataset is empty"),
            DatasetError::DimMismatch { data, query } => {
                write!(f, "dimension mismatch: dataset {data}, queries {query}")
            }
            DatasetError::KTooLarge { k, n } => {
                write!(f, "k={k} exceeds dataset size n={n}")
            }
        }
    }
}

impl core::error::Error for DatasetError {}

/// A candidate ordered ascending by (distance, id); used in max-heaps that
/// keep the k best seen so far.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Neighbor {
    pub dist: f32,
    pub id: u32,
}

impl PartialEq for Neighbor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact k-NN by linear scan: for each query the `k` nearest vectors by
/// squared Euclidean distance, ascending, ties toward the lower id.
///
/// Runs single-threaded; callers that want parallelism split the query set
/// and stitch the per-chunk results (the answer is per-query deterministic).
pub fn brute_force_knn(
    data: &Dataset,
    queries: &Dataset,
    k: usize,
) -> Result<GroundTruth, DatasetError> {
    if data.is_empty() {
        return Err(DatasetError::Empty);
    }
    if data.dim() != queries.dim() {
        return Err(DatasetError::DimMismatch {
            data: data.dim(),
            query: queries.dim(),
        });
    }
    let n = data.len();
    if k == 0 || k > n {
        return Err(DatasetError::KTooLarge { k, n });
    }

    let mut ids = Vec::with_capacity(queries.len() * k);
    let mut dists = Vec::with_capacity(queries.len() * k);
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    for q in queries.rows() {
        heap.clear();
        for (id, x) in data.rows().enumerate() {
            let cand = Neighbor {
                dist: vecmath::l2_sq(x, q),
                id: id as u32,
            };
            if heap.len() < k {
                heap.push(cand);
            } else if cand < *heap.peek().expect("heap is non-empty") {
                heap.pop();
                heap.push(cand);
            }
        }
        let mut row: Vec<Neighbor> = heap.drain().collect();
        row.sort_unstable();
        for nb in &row {
            ids.push(nb.id);
            dists.push(nb.dist);
        }
    }
    Ok(GroundTruth::new(k, ids, dists))
}
