//! Hierarchical navigable small-world graph with a pluggable
//! distance-computation operator in the base-layer refinement loop.
//!
//! Construction is standard: geometric level assignment (`floor(-ln(u) /
//! ln(M))` from a seeded PRNG), beam search of width `ef_construction` per
//! layer, plain closest-M neighbor selection, degree caps `M` on upper
//! layers and `2M` at the base. Search descends the upper layers greedily
//! with exact distances (a handful of hops), then runs the base-layer beam
//! where every *new* candidate goes through the configured operator:
//! survivors enter the result queue with their exact distance, pruned
//! candidates keep feeding navigation with their approximate distance but
//! can never enter the results.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Neighbor};
use crate::transform::{norms2, Rotor};
use crate::vecmath;

use super::{tally, DcoStrategy, Evaluator, IndexError, SearchResult, TAU_NOT_FULL};

/// Navigable small-world index over rotated vectors.
#[derive(Clone, Debug)]
pub struct HnswIndex {
    rotor: Rotor,
    m: usize,
    ef_construction: usize,
    entry: u32,
    max_level: usize,
    levels: Vec<u8>,
    /// `adjacency[node][layer]` = neighbor ids; a node has entries for
    /// layers `0..=levels[node]`.
    adjacency: Vec<Vec<Vec<u32>>>,
    rotated: Dataset,
    norms: Vec<f32>,
}

impl HnswIndex {
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

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ef_construction(&self) -> usize {
        self.ef_construction
    }

    pub fn entry(&self) -> u32 {
        self.entry
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn adjacency(&self) -> &[Vec<Vec<u32>>] {
        &self.adjacency
    }

    pub fn rotated(&self) -> &Dataset {
        &self.rotated
    }

    pub fn norms(&self) -> &[f32] {
        &self.norms
    }

    /// Reassembles an index from stored parts (deserialization path).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        rotor: Rotor,
        m: usize,
        ef_construction: usize,
        entry: u32,
        max_level: usize,
        levels: Vec<u8>,
        adjacency: Vec<Vec<Vec<u32>>>,
        rotated: Dataset,
        norms: Vec<f32>,
    ) -> Self {
        assert_eq!(rotated.dim(), rotor.dim());
        assert_eq!(levels.len(), rotated.len());
        assert_eq!(adjacency.len(), rotated.len());
        assert_eq!(norms.len(), rotated.len());
        HnswIndex {
            rotor,
            m,
            ef_construction,
            entry,
            max_level,
            levels,
            adjacency,
            rotated,
            norms,
        }
    }
}

/// Epoch-stamped visited set, reused across inserts without re-zeroing.
struct Visited {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn new() -> Self {
        Visited {
            stamp: Vec::new(),
            epoch: 0,
        }
    }

    fn grow_to(&mut self, n: usize) {
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
        }
    }

    fn next_epoch(&mut self) {
        self.epoch += 1;
        if self.epoch == 0 {
            // Wrapped: clear and restart.
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; returns `true` if it was already visited this epoch.
    #[inline]
    fn mark(&mut self, id: u32) -> bool {
        let slot = &mut self.stamp[id as usize];
        if *slot == self.epoch {
            true
        } else {
            *slot = self.epoch;
            false
        }
    }
}

/// Greedy exact descent within one layer: repeatedly hop to the strictly
/// closest neighbor until no neighbor improves.
fn greedy_closest(
    rotated: &Dataset,
    adjacency: &[Vec<Vec<u32>>],
    level: usize,
    mut ep: u32,
    q: &[f32],
) -> u32 {
    let mut best_d = vecmath::l2_sq_fast(rotated.row(ep as usize), q);
    loop {
        let mut next = ep;
        let mut next_d = best_d;
        for &nb in &adjacency[ep as usize][level] {
            let d = vecmath::l2_sq_fast(rotated.row(nb as usize), q);
            if d < next_d {
                next_d = d;
                next = nb;
            }
        }
        if next == ep {
            return ep;
        }
        ep = next;
        best_d = next_d;
    }
}

/// Exact beam search within one layer (construction helper). Returns up to
/// `ef` closest nodes, ascending.
fn search_layer_exact(
    rotated: &Dataset,
    adjacency: &[Vec<Vec<u32>>],
    level: usize,
    ep: u32,
    q: &[f32],
    ef: usize,
    visited: &mut Visited,
) -> Vec<Neighbor> {
    visited.next_epoch();
    let mut frontier: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
    let mut results: BinaryHeap<Neighbor> = BinaryHeap::new();
    visited.mark(ep);
    let d0 = vecmath::l2_sq_fast(rotated.row(ep as usize), q);
    frontier.push(Reverse(Neighbor { dist: d0, id: ep }));
    results.push(Neighbor { dist: d0, id: ep });

    while let Some(Reverse(c)) = frontier.pop() {
        if results.len() == ef && c.dist > results.peek().expect("non-empty").dist {
            break;
        }
        for &nb in &adjacency[c.id as usize][level] {
            if visited.mark(nb) {
                continue;
            }
            let d = vecmath::l2_sq_fast(rotated.row(nb as usize), q);
            if results.len() < ef || d < results.peek().expect("non-empty").dist {
                frontier.push(Reverse(Neighbor { dist: d, id: nb }));
                results.push(Neighbor { dist: d, id: nb });
                if results.len() > ef {
                    results.pop();
                }
            }
        }
    }
    let mut v = results.into_vec();
    v.sort_unstable();
    v
}

/// Builds the graph by sequential insertion; deterministic in `seed`.
pub fn hnsw_build(
    data: &Dataset,
    rotor: &Rotor,
    m: usize,
    ef_construction: usize,
    seed: u64,
) -> Result<HnswIndex, IndexError> {
    if data.is_empty() {
        return Err(IndexError::EmptyDataset);
    }
    if data.dim() != rotor.dim() {
        return Err(IndexError::DimMismatch {
            expected: rotor.dim(),
            got: data.dim(),
        });
    }
    if m < 2 {
        return Err(IndexError::BadParam("M must be at least 2"));
    }
    if ef_construction == 0 {
        return Err(IndexError::BadParam("ef_construction must be at least 1"));
    }
    let n = data.len();
    let rotated = rotor.apply_dataset(data);
    let norms = norms2(data, rotor)?;

    // Geometric level assignment.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_ln_m = 1.0 / libm::log(m as f64);
    let levels: Vec<u8> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>().max(1e-300);
            libm::floor(-libm::log(u) * inv_ln_m).min(31.0) as u8
        })
        .collect();

    let mut adjacency: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n);
    let mut entry = 0u32;
    let mut max_level = levels[0] as usize;
    let mut visited = Visited::new();

    for i in 0..n {
        let l = levels[i] as usize;
        adjacency.push(vec![Vec::new(); l + 1]);
        visited.grow_to(i + 1);
        if i == 0 {
            continue;
        }
        let q = rotated.row(i);

        // Greedy descent through layers above the node's own level.
        let mut ep = entry;
        let mut lc = max_level;
        while lc > l {
            ep = greedy_closest(&rotated, &adjacency, lc, ep, q);
            lc -= 1;
        }

        // Connect on each shared layer, top-down.
        let top = l.min(max_level);
        for layer in (0..=top).rev() {
            let cands =
                search_layer_exact(&rotated, &adjacency, layer, ep, q, ef_construction, &mut visited);
            let selected: Vec<u32> = cands.iter().take(m).map(|nb| nb.id).collect();
            ep = cands[0].id;
            let cap = if layer == 0 { 2 * m } else { m };
            for &nb in &selected {
                adjacency[nb as usize][layer].push(i as u32);
                if adjacency[nb as usize][layer].len() > cap {
                    // Keep the closest `cap` neighbors of nb.
                    let base = rotated.row(nb as usize);
                    let mut ranked: Vec<Neighbor> = adjacency[nb as usize][layer]
                        .iter()
                        .map(|&o| Neighbor {
                            dist: vecmath::l2_sq_fast(base, rotated.row(o as usize)),
                            id: o,
                        })
                        .collect();
                    ranked.sort_unstable();
                    ranked.truncate(cap);
                    adjacency[nb as usize][layer] = ranked.into_iter().map(|nb| nb.id).collect();
                }
            }
            adjacency[i][layer] = selected;
        }

        if l > max_level {
            entry = i as u32;
            max_level = l;
        }
    }

    Ok(HnswIndex {
        rotor: rotor.clone(),
        m,
        ef_construction,
        entry,
        max_level,
        levels,
        adjacency,
        rotated,
        norms,
    })
}

/// Beam search of width `max(ef, k)`: exact greedy descent on the upper
/// layers (not counted in the DCO counters), then the base-layer beam with
/// the strategy's operator deciding result-queue admission. The pruning
/// threshold is the current `ef`-th best distance once the queue fills.
pub fn hnsw_search(
    idx: &HnswIndex,
    q: &[f32],
    k: usize,
    ef: usize,
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
    if ef == 0 {
        return Err(IndexError::BadParam("ef must be at least 1"));
    }
    let ef = ef.max(k);
    let mut ev = Evaluator::new(&idx.rotor, None, strategy, q)?;

    let mut ep = idx.entry;
    for lc in (1..=idx.max_level).rev() {
        ep = greedy_closest(&idx.rotated, &idx.adjacency, lc, ep, &ev.ctx.q_rot);
    }

    let mut result = SearchResult::default();
    let lookups = ev.lookups_per_call();
    let mut seen = vec![false; idx.len()];
    let mut frontier: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
    let mut best: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(ef + 1);

    seen[ep as usize] = true;
    let r0 = ev.eval(ep, idx.rotated.row(ep as usize), idx.norms[ep as usize], TAU_NOT_FULL);
    tally(&mut result, &r0, lookups);
    debug_assert!(!r0.pruned, "negative tau never prunes");
    frontier.push(Reverse(Neighbor {
        dist: r0.distance,
        id: ep,
    }));
    best.push(Neighbor {
        dist: r0.distance,
        id: ep,
    });

    while let Some(Reverse(c)) = frontier.pop() {
        if best.len() == ef && c.dist > best.peek().expect("non-empty").dist {
            break;
        }
        for &nb in &idx.adjacency[c.id as usize][0] {
            if seen[nb as usize] {
                continue;
            }
            seen[nb as usize] = true;
            let tau = if best.len() == ef {
                best.peek().expect("non-empty").dist
            } else {
                TAU_NOT_FULL
            };
            let r = ev.eval(nb, idx.rotated.row(nb as usize), idx.norms[nb as usize], tau);
            tally(&mut result, &r, lookups);
            // Pruned or not, the candidate keeps guiding navigation.
            frontier.push(Reverse(Neighbor {
                dist: r.distance,
                id: nb,
            }));
            if !r.pruned {
                let cand = Neighbor {
                    dist: r.distance,
                    id: nb,
                };
                if best.len() < ef {
                    best.push(cand);
                } else if cand < *best.peek().expect("non-empty") {
                    best.pop();
                    best.push(cand);
                }
            }
        }
    }

    let mut row = best.into_vec();
    row.sort_unstable();
    row.truncate(k);
    result.neighbors = row.into_iter().map(|nb| (nb.id, nb.dist)).collect();
    Ok(result)
}
