//! Inverted-file index: k-means buckets over rotated vectors, searched by
//! scanning the `nprobe` nearest buckets through a distance-computation
//! operator.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Neighbor};
use crate::quant::{code_residual, pq_encode, pq_encode_dataset, Codebook};
use crate::transform::{norms2, Rotor};
use crate::vecmath;

use super::{tally, DcoStrategy, Evaluator, IndexError, QuantPayload, SearchResult, TAU_NOT_FULL};

/// Flat inverted-file index. Stores the rotor it was built with, the
/// rotated vectors (indexed by id), their norms, the bucket centroids (in
/// rotated space) and memberships, and optionally per-vector quantization
/// codes for the learned-quant strategy.
#[derive(Clone, Debug)]
pub struct IvfIndex {
    rotor: Rotor,
    /// `nlist x dim`, rotated space.
    centroids: Vec<f32>,
    buckets: Vec<Vec<u32>>,
    rotated: Dataset,
    norms: Vec<f32>,
    quant: Option<QuantPayload>,
}

impl IvfIndex {
    pub fn rotor(&self) -> &Rotor {
        &self.rotor
    }

    pub fn dim(&self) -> usize {
        self.rotated.dim()
    }

    pub fn len(&self) -> usize {
        self.rotated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotated.is_empty()
    }

    pub fn nlist(&self) -> usize {
        self.buckets.len()
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn buckets(&self) -> &[Vec<u32>] {
        &self.buckets
    }

    /// The rotated dataset, indexed by vector id.
    pub fn rotated(&self) -> &Dataset {
        &self.rotated
    }

    /// `||x - mean||^2` per vector.
    pub fn norms(&self) -> &[f32] {
        &self.norms
    }

    pub fn quant(&self) -> Option<&QuantPayload> {
        self.quant.as_ref()
    }

    /// Reassembles an index from stored parts (deserialization path).
    pub fn from_parts(
        rotor: Rotor,
        centroids: Vec<f32>,
        buckets: Vec<Vec<u32>>,
        rotated: Dataset,
        norms: Vec<f32>,
        quant: Option<QuantPayload>,
    ) -> Self {
        let dim = rotor.dim();
        assert_eq!(rotated.dim(), dim);
        assert_eq!(norms.len(), rotated.len());
        assert_eq!(centroids.len() % dim, 0);
        assert_eq!(centroids.len() / dim, buckets.len());
        IvfIndex {
            rotor,
            centroids,
            buckets,
            rotated,
            norms,
            quant,
        }
    }
}

/// Builds the inverted file: k-means (25 Lloyd iterations, deterministic in
/// `seed`) over the full rotated dataset, one bucket per centroid. With
/// `with_codes`, every vector is also encoded under the given codebook
/// (trained on rotor-rotated data) and its quantization residual stored.
pub fn ivf_build(
    data: &Dataset,
    rotor: &Rotor,
    nlist: usize,
    seed: u64,
    with_codes: Option<&Codebook>,
) -> Result<IvfIndex, IndexError> {
    if data.is_empty() {
        return Err(IndexError::EmptyDataset);
    }
    if data.dim() != rotor.dim() {
        return Err(IndexError::DimMismatch {
            expected: rotor.dim(),
            got: data.dim(),
        });
    }
    if nlist == 0 {
        return Err(IndexError::BadParam("nlist must be at least 1"));
    }
    if nlist > data.len() {
        return Err(IndexError::BadParam("nlist must not exceed the dataset size"));
    }
    let dim = data.dim();
    let rotated = rotor.apply_dataset(data);
    let norms = norms2(data, rotor)?;
    let km = crate::quant::kmeans(rotated.as_slice(), dim, nlist, 25, seed)?;
    let mut buckets: Vec<Vec<u32>> = alloc::vec![Vec::new(); nlist];
    for (i, &c) in km.assignments.iter().enumerate() {
        buckets[c as usize].push(i as u32);
    }
    let quant = match with_codes {
        None => None,
        Some(cb) => {
            if cb.dim() != dim {
                return Err(IndexError::DimMismatch {
                    expected: dim,
                    got: cb.dim(),
                });
            }
            let codes = pq_encode_dataset(cb, &rotated)?;
            let residuals = rotated
                .rows()
                .map(|row| code_residual(cb, row, &pq_encode(cb, row)))
                .collect();
            Some(QuantPayload {
                codebook: cb.clone(),
                codes,
                residuals,
            })
        }
    };
    Ok(IvfIndex {
        rotor: rotor.clone(),
        centroids: km.centroids,
        buckets,
        rotated,
        norms,
        quant,
    })
}

/// Ranks bucket centroids by exact distance to the rotated query,
/// ascending (ties to the lower centroid id).
fn rank_centroids(idx: &IvfIndex, q_rot: &[f32]) -> Vec<(f32, usize)> {
    let dim = idx.dim();
    let mut rank: Vec<(f32, usize)> = (0..idx.nlist())
        .map(|c| {
            (
                vecmath::l2_sq_fast(q_rot, &idx.centroids[c * dim..(c + 1) * dim]),
                c,
            )
        })
        .collect();
    rank.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    rank
}

/// The ids a search with this `nprobe` would visit, in visit order
/// (bucket rank, then insertion order). Useful for mining training
/// candidates that match the index's access pattern.
pub fn probe_candidates(
    idx: &IvfIndex,
    q: &[f32],
    nprobe: usize,
) -> Result<Vec<u32>, IndexError> {
    if q.len() != idx.dim() {
        return Err(IndexError::DimMismatch {
            expected: idx.dim(),
            got: q.len(),
        });
    }
    if nprobe == 0 {
        return Err(IndexError::BadParam("nprobe must be at least 1"));
    }
    let q_rot = idx.rotor.apply(q);
    let rank = rank_centroids(idx, &q_rot);
    let mut out = Vec::new();
    for &(_, c) in rank.iter().take(nprobe.min(idx.nlist())) {
        out.extend_from_slice(&idx.buckets[c]);
    }
    Ok(out)
}

/// Searches the `nprobe` nearest buckets, pushing every member through the
/// strategy's operator. The result queue is a bounded max-heap of size `k`;
/// its worst distance is the pruning threshold once full (before that, a
/// negative sentinel disables pruning). Pruned candidates never enter the
/// queue. `nprobe` larger than `nlist` is clamped.
pub fn ivf_search(
    idx: &IvfIndex,
    q: &[f32],
    k: usize,
    nprobe: usize,
    strategy: &DcoStrategy,
) -> Result<SearchResult, IndexError> {
    if k == 0 {
        return Err(IndexError::BadParam("k must be at least 1"));
    }
    if k > idx.len() {
        return Err(IndexError::KTooLarge {
            k,
            n: idx.len(),
        });
    }
    if nprobe == 0 {
        return Err(IndexError::BadParam("nprobe must be at least 1"));
    }
    let mut ev = Evaluator::new(&idx.rotor, idx.quant.as_ref(), strategy, q)?;
    let rank = rank_centroids(idx, &ev.ctx.q_rot);

    let mut result = SearchResult::default();
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    let lookups = ev.lookups_per_call();
    for &(_, c) in rank.iter().take(nprobe.min(idx.nlist())) {
        for &id in &idx.buckets[c] {
            let tau = if heap.len() == k {
                heap.peek().expect("heap is full").dist
            } else {
                TAU_NOT_FULL
            };
            let r = ev.eval(id, idx.rotated.row(id as usize), idx.norms[id as usize], tau);
            tally(&mut result, &r, lookups);
            if !r.pruned {
                let cand = Neighbor {
                    dist: r.distance,
                    id,
                };
                if heap.len() < k {
                    heap.push(cand);
                } else if cand < *heap.peek().expect("heap is full") {
                    heap.pop();
                    heap.push(cand);
                }
            }
        }
    }

    let mut row: Vec<Neighbor> = heap.into_vec();
    row.sort_unstable();
    result.neighbors = row.into_iter().map(|nb| (nb.id, nb.dist)).collect();
    Ok(result)
}
