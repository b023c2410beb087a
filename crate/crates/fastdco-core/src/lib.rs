//! Core algorithms for fast distance-computation operators (DCOs) in
//! approximate nearest-neighbor search.
//!
//! The central idea: rotate vectors with an orthogonal transform that
//! concentrates variance in the leading dimensions (PCA), split the squared
//! Euclidean distance into a part computable from the first `d` rotated
//! dimensions plus a residual, and bound the residual with a Gaussian
//! quantile of its (query-dependent) variance. A candidate whose partial
//! distance already exceeds the pruning threshold by more than `m` standard
//! deviations of the residual error is dropped without scanning its tail.
//! A learned linear classifier generalizes the same test, and a quantized
//! variant runs it on top of asymmetric PQ/OPQ distances.
//!
//! The crate is `no_std` (with `alloc`); anything touching files, clocks or
//! threads lives in the companion `fastdco` crate.

#![no_std]
#![deny(unsafe_code)]
// The numeric kernels walk several parallel arrays with one index; rewriting
// them around a single iterator obscures that symmetry.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod dataset;
pub mod dco;
pub mod index;
pub mod learn;
pub mod metrics;
pub mod quant;
pub mod synth;
pub mod transform;
pub mod vecmath;

pub use dataset::{brute_force_knn, Dataset, DatasetError, GroundTruth};
pub use dco::{
    dco_ads, dco_bsa_res, dco_bsa_res_incremental, dco_exact, dco_learned_proj, dco_learned_quant,
    DcoResult,
};
pub use index::{
    hnsw_build, hnsw_search, ivf_build, ivf_search, probe_candidates, DcoStrategy, HnswIndex,
    IndexError, IvfIndex, QuantPayload, SearchResult,
};
pub use learn::{
    bce_gradient, bce_loss, build_cascade, build_cascade_with, calibrate_beta, collect_training,
    collect_training_quant, label0_recall, train_logistic, train_quant_classifier,
    train_quant_classifier_with, Cascade, LabeledSample, LearnError, LinearClassifier, TrainOpts,
};
pub use metrics::recall_at_k;
pub use quant::{
    adc, build_lut, code_residual, kmeans, opq_train, pq_encode, pq_encode_dataset, pq_train,
    Codebook, Kmeans, LookupTable, PackedCodes, QuantError,
};
pub use synth::{gen_synthetic, SynthKind};
pub use transform::{
    checkpoints, fit_pca, fit_random_rotor, identity_rotor, make_query_context, measure_sigma2,
    norms2, QueryContext, Rotor, RotorKind, TransformError,
};
