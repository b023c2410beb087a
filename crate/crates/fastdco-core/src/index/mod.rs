//! IVF and HNSW indexes with a pluggable distance-computation operator in
//! the candidate-refinement loop.
//!
//! Both index types store vectors in rotated, centered space together with
//! their `||x - mean||^2` norms, build a per-query [`QueryContext`] once
//! (one `O(D^2)` rotation), and then drive every candidate through the
//! configured [`DcoStrategy`]. Pruned candidates never enter the result
//! queue; counters on [`SearchResult`] expose how much work the operator
//! actually did.

mod hnsw;
mod ivf;

pub use hnsw::{hnsw_build, hnsw_search, HnswIndex};
pub use ivf::{ivf_build, ivf_search, probe_candidates, IvfIndex};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::DatasetError;
use crate::dco::{
    dco_ads, dco_bsa_res, dco_bsa_res_incremental, dco_exact, dco_learned_proj,
    dco_learned_quant, DcoResult,
};
use crate::learn::{Cascade, LinearClassifier};
use crate::quant::{build_lut, Codebook, LookupTable, PackedCodes, QuantError};
use crate::transform::{make_query_context, QueryContext, Rotor, RotorKind, TransformError};

#[derive(Clone, Debug, PartialEq)]
pub enum IndexError {
    EmptyDataset,
    DimMismatch { expected: usize, got: usize },
    KTooLarge { k: usize, n: usize },
    BadParam(&'static str),
    /// The strategy requires a random rotor (its guarantee rests on random
    /// projections) but the index was built with a different transform.
    StrategyNeedsRandomRotor,
    /// The strategy requires per-vector quantization codes, which this
    /// index was built without.
    StrategyNeedsCodes,
    Dataset(DatasetError),
    Transform(TransformError),
    Quant(QuantError),
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::EmptyDataset => write!(f, "dataset is empty"),
            IndexError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            IndexError::KTooLarge { k, n } => {
                write!(f, "k = {k} exceeds the {n} indexed vectors")
            }
            IndexError::BadParam(p) => write!(f, "bad parameter: {p}"),
            IndexError::StrategyNeedsRandomRotor => {
                write!(f, "this strategy requires an index built with a random rotor")
            }
            IndexError::StrategyNeedsCodes => {
                write!(f, "this strategy requires an index built with quantization codes")
            }
            IndexError::Dataset(e) => write!(f, "{e}"),
            IndexError::Transform(e) => write!(f, "{e}"),
            IndexError::Quant(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for IndexError {}

impl From<DatasetError> for IndexError {
    fn from(e: DatasetError) -> Self {
        IndexError::Dataset(e)
    }
}

impl From<TransformError> for IndexError {
    fn from(e: TransformError) -> Self {
        IndexError::Transform(e)
    }
}

impl From<QuantError> for IndexError {
    fn from(e: QuantError) -> Self {
        IndexError::Quant(e)
    }
}

/// Which distance-computation operator the search loop runs per candidate.
#[derive(Clone, Debug)]
pub enum DcoStrategy<'a> {
    /// Full exact distance for every candidate.
    Exact,
    /// Random-projection hypothesis testing (requires a random rotor).
    Ads { epsilon0: f32, delta_d: usize },
    /// Quantile-bound pruning at one fixed projection dimension.
    BsaRes { m: f32, d: usize },
    /// Quantile-bound pruning at every multiple of `delta_d`.
    BsaResInc { m: f32, delta_d: usize },
    /// Learned per-checkpoint classifier cascade over projection distance.
    LearnedProj { cascade: &'a Cascade },
    /// Learned classifier over the asymmetric quantized distance (requires
    /// an index built with codes).
    LearnedQuant { classifier: &'a LinearClassifier },
}

impl DcoStrategy<'_> {
    /// Short stable tag for reports.
    pub fn tag(&self) -> &'static str {
        match self {
            DcoStrategy::Exact => "exact",
            DcoStrategy::Ads { .. } => "ads",
            DcoStrategy::BsaRes { .. } => "bsa_res",
            DcoStrategy::BsaResInc { .. } => "bsa_res_inc",
            DcoStrategy::LearnedProj { .. } => "learned_proj",
            DcoStrategy::LearnedQuant { .. } => "learned_quant",
        }
    }

    /// Checkpoint stride the query context must be built with.
    fn delta_d(&self, dim: usize) -> usize {
        match self {
            DcoStrategy::Exact | DcoStrategy::LearnedQuant { .. } => dim,
            DcoStrategy::Ads { delta_d, .. } => *delta_d,
            DcoStrategy::BsaRes { d, .. } => *d,
            DcoStrategy::BsaResInc { delta_d, .. } => *delta_d,
            DcoStrategy::LearnedProj { cascade } => cascade.delta_d,
        }
    }

    fn validate(&self, dim: usize) -> Result<(), IndexError> {
        let check_delta = |delta_d: usize| {
            if delta_d == 0 || delta_d > dim {
                Err(IndexError::BadParam("delta_d must lie in 1..=D"))
            } else {
                Ok(())
            }
        };
        match self {
            DcoStrategy::Exact => Ok(()),
            DcoStrategy::Ads { epsilon0, delta_d } => {
                if *epsilon0 <= 0.0 {
                    return Err(IndexError::BadParam("epsilon0 must be positive"));
                }
                check_delta(*delta_d)
            }
            DcoStrategy::BsaRes { m, d } => {
                if *m <= 0.0 {
                    return Err(IndexError::BadParam("multiplier m must be positive"));
                }
                check_delta(*d)
            }
            DcoStrategy::BsaResInc { m, delta_d } => {
                if *m <= 0.0 {
                    return Err(IndexError::BadParam("multiplier m must be positive"));
                }
                check_delta(*delta_d)
            }
            DcoStrategy::LearnedProj { cascade } => check_delta(cascade.delta_d),
            DcoStrategy::LearnedQuant { classifier } => {
                if classifier.extra_weights.len() != 1 {
                    return Err(IndexError::BadParam(
                        "quantized classifier must take exactly one extra feature",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Search output: the `K` best (id, squared distance) pairs ascending, plus
/// work counters for the operator that produced them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchResult {
    pub neighbors: Vec<(u32, f32)>,
    /// Candidates evaluated through the DCO.
    pub dco_calls: u64,
    /// Vector dimensions touched across all DCO calls.
    pub dims_scanned_total: u64,
    /// Calls that ended in a prune.
    pub pruned_count: u64,
    /// Calls that fell through to the exact distance
    /// (`pruned_count + exact_count == dco_calls`).
    pub exact_count: u64,
    /// Quantization-table lookups (learned-quant strategy only).
    pub lookups_total: u64,
}

impl SearchResult {
    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|&(id, _)| id).collect()
    }

    /// `dims_scanned_total / (dco_calls * D)`: average fraction of each
    /// candidate vector actually scanned.
    pub fn scan_rate(&self, dim: usize) -> f64 {
        if self.dco_calls == 0 {
            return 0.0;
        }
        self.dims_scanned_total as f64 / (self.dco_calls as f64 * dim as f64)
    }

    pub fn pruned_rate(&self) -> f64 {
        if self.dco_calls == 0 {
            return 0.0;
        }
        self.pruned_count as f64 / self.dco_calls as f64
    }
}

/// Per-vector quantization payload an index optionally carries for the
/// learned-quant strategy.
#[derive(Clone, Debug)]
pub struct QuantPayload {
    pub codebook: Codebook,
    pub codes: PackedCodes,
    /// `||rotate(x) - reconstruct(code(x))||^2` per vector.
    pub residuals: Vec<f32>,
}

/// Sentinel for "the result queue is not full": every operator treats a
/// negative threshold as never-prune.
pub(crate) const TAU_NOT_FULL: f32 = -1.0;

/// Per-query dispatcher: owns the query context (and table for quantized
/// strategies) and routes candidates to the configured operator.
pub(crate) struct Evaluator<'a> {
    pub ctx: QueryContext,
    strategy: &'a DcoStrategy<'a>,
    lut: Option<LookupTable>,
    quant: Option<&'a QuantPayload>,
    code_buf: Vec<u16>,
    lookups_per_call: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        rotor: &Rotor,
        quant: Option<&'a QuantPayload>,
        strategy: &'a DcoStrategy<'a>,
        q: &[f32],
    ) -> Result<Self, IndexError> {
        let dim = rotor.dim();
        if q.len() != dim {
            return Err(IndexError::DimMismatch {
                expected: dim,
                got: q.len(),
            });
        }
        strategy.validate(dim)?;
        if matches!(strategy, DcoStrategy::Ads { .. }) && rotor.kind() != RotorKind::Random {
            return Err(IndexError::StrategyNeedsRandomRotor);
        }
        let ctx = make_query_context(rotor, q, strategy.delta_d(dim))?;
        let (lut, code_buf, lookups_per_call) = match strategy {
            DcoStrategy::LearnedQuant { .. } => {
                let payload = quant.ok_or(IndexError::StrategyNeedsCodes)?;
                let lut = build_lut(&payload.codebook, &ctx.q_rot);
                let subs = payload.codebook.num_subspaces();
                (Some(lut), vec![0u16; subs], subs as u64)
            }
            _ => (None, Vec::new(), 0),
        };
        Ok(Evaluator {
            ctx,
            strategy,
            lut,
            quant,
            code_buf,
            lookups_per_call,
        })
    }

    /// Runs the strategy's operator on candidate `id`.
    #[inline]
    pub fn eval(&mut self, id: u32, x_rot: &[f32], x_norm2: f32, tau: f32) -> DcoResult {
        match self.strategy {
            DcoStrategy::Exact => dco_exact(x_rot, &self.ctx, x_norm2),
            DcoStrategy::Ads { epsilon0, delta_d } => {
                dco_ads(x_rot, &self.ctx, x_norm2, tau, *epsilon0, *delta_d)
            }
            DcoStrategy::BsaRes { m, d } => dco_bsa_res(x_rot, &self.ctx, x_norm2, tau, *m, *d),
            DcoStrategy::BsaResInc { m, delta_d } => {
                dco_bsa_res_incremental(x_rot, &self.ctx, x_norm2, tau, *m, *delta_d)
            }
            DcoStrategy::LearnedProj { cascade } => {
                dco_learned_proj(x_rot, &self.ctx, x_norm2, tau, cascade)
            }
            DcoStrategy::LearnedQuant { classifier } => {
                let payload = self.quant.expect("validated at construction");
                payload.codes.read_into(id as usize, &mut self.code_buf);
                dco_learned_quant(
                    &self.code_buf,
                    self.lut.as_ref().expect("validated at construction"),
                    payload.residuals[id as usize],
                    tau,
                    classifier,
                    x_rot,
                    &self.ctx.q_rot,
                )
            }
        }
    }

    /// Table lookups charged per call (zero for non-quantized strategies).
    #[inline]
    pub fn lookups_per_call(&self) -> u64 {
        self.lookups_per_call
    }
}

/// Accumulates DCO counters into a result under construction.
#[inline]
pub(crate) fn tally(result: &mut SearchResult, r: &DcoResult, lookups: u64) {
    result.dco_calls += 1;
    result.dims_scanned_total += r.dims_scanned as u64;
    result.lookups_total += lookups;
    if r.pruned {
        result.pruned_count += 1;
    } else {
        result.exact_count += 1;
    }
}
