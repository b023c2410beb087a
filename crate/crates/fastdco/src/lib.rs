//! IO, serialization, benchmarking and CLI support for `fastdco-core`.
//!
//! The core crate owns everything mathematical; this crate adds what a
//! deployment needs around it: `.fvecs`/`.ivecs` dataset files, binary
//! snapshots of trained artifacts and built indexes, and a benchmark
//! harness that sweeps search knobs and reports recall/QPS tables.

pub mod bench;
pub mod serial;
pub mod vecio;

pub use bench::{
    run_bench, timed_qps, BenchArtifacts, BenchConfig, BenchError, BenchIndex, BenchPoint,
    BenchReport, StrategySpec,
};
pub use serial::{
    load_cascade, load_classifier, load_codebook, load_hnsw, load_ivf, load_rotor, save_cascade,
    save_classifier, save_codebook, save_hnsw, save_ivf, save_rotor, SerialError,
};
pub use vecio::{
    read_fvecs, read_ground_truth, read_ivecs, write_fvecs, write_ground_truth, write_ivecs,
    VecioError,
};
