//! Benchmark harness: sweeps search-width knobs per strategy over a fixed
//! query set and reports recall, throughput, and pruning statistics.
//!
//! Every non-timing field of the report is deterministic given the config
//! hash inputs; QPS is wall-clock and measured end-to-end per query,
//! including the query rotation and (for quantized strategies) lookup-table
//! construction that happen inside the search call.

use std::time::Instant;

use fastdco_core::learn::{Cascade, LinearClassifier};
use fastdco_core::{
    hnsw_search, ivf_search, recall_at_k, DcoStrategy, Dataset, GroundTruth, HnswIndex,
    IndexError, IvfIndex, SearchResult,
};
use thiserror::Error;

/// Which index a bench run drives. The knob swept is `nprobe` for IVF and
/// `ef` for HNSW.
#[derive(Clone, Copy)]
pub enum BenchIndex<'a> {
    Ivf(&'a IvfIndex),
    Hnsw(&'a HnswIndex),
}

impl BenchIndex<'_> {
    pub fn knob_name(&self) -> &'static str {
        match self {
            BenchIndex::Ivf(_) => "nprobe",
            BenchIndex::Hnsw(_) => "ef",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BenchIndex::Ivf(ix) => ix.dim(),
            BenchIndex::Hnsw(ix) => ix.dim(),
        }
    }

    /// One-line structural description, folded into the config hash so
    /// reports from different indexes never collide.
    pub fn descriptor(&self) -> String {
        match self {
            BenchIndex::Ivf(ix) => {
                format!("ivf n={} dim={} nlist={}", ix.len(), ix.dim(), ix.nlist())
            }
            BenchIndex::Hnsw(ix) => format!(
                "hnsw n={} dim={} M={} efc={}",
                ix.len(),
                ix.dim(),
                ix.m(),
                ix.ef_construction()
            ),
        }
    }
}

/// Strategy selection plus its tuning parameters, as named on the CLI.
#[derive(Clone, Debug, PartialEq)]
pub enum StrategySpec {
    Exact,
    Ads { eps0: f32, delta_d: usize },
    BsaRes { m: f32, d: usize },
    BsaResInc { m: f32, delta_d: usize },
    LearnedPca,
    LearnedOpq,
}

impl StrategySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            StrategySpec::Exact => "exact",
            StrategySpec::Ads { .. } => "ads",
            StrategySpec::BsaRes { .. } => "bsa",
            StrategySpec::BsaResInc { .. } => "bsa-inc",
            StrategySpec::LearnedPca => "learned-pca",
            StrategySpec::LearnedOpq => "learned-opq",
        }
    }

    fn descriptor(&self) -> String {
        match self {
            StrategySpec::Exact => "exact".into(),
            StrategySpec::Ads { eps0, delta_d } => format!("ads eps0={eps0} dd={delta_d}"),
            StrategySpec::BsaRes { m, d } => format!("bsa m={m} d={d}"),
            StrategySpec::BsaResInc { m, delta_d } => format!("bsa-inc m={m} dd={delta_d}"),
            StrategySpec::LearnedPca => "learned-pca".into(),
            StrategySpec::LearnedOpq => "learned-opq".into(),
        }
    }
}

/// Learned artifacts a strategy may need; plain strategies ignore them.
#[derive(Clone, Copy, Default)]
pub struct BenchArtifacts<'a> {
    pub cascade: Option<&'a Cascade>,
    pub quant_classifier: Option<&'a LinearClassifier>,
}

/// One bench invocation: the strategy list and the knob sweep they share.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Dataset label written into the report (not a path).
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    /// Worker count for the N-thread throughput pass.
    pub threads: usize,
    /// Values of the index's search-width knob (nprobe / ef).
    pub sweep: Vec<usize>,
    pub strategies: Vec<StrategySpec>,
}

/// Aggregates for one (strategy, knob) grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchPoint {
    pub strategy: String,
    pub knob: usize,
    pub recall: f64,
    pub qps_1: f64,
    pub qps_n: f64,
    pub avg_scan_rate: f64,
    pub avg_pruned_rate: f64,
    pub avg_dco_calls: f64,
    pub avg_lookups: f64,
}

/// Full sweep output plus the identifying metadata.
#[derive(Clone, Debug)]
pub struct BenchReport {
    pub dataset: String,
    pub seed: u64,
    pub config_hash: u64,
    pub knob_name: &'static str,
    pub points: Vec<BenchPoint>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("strategy {0} needs a missing artifact: {1}")]
    MissingArtifact(&'static str, &'static str),
    #[error("bad bench config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// FNV-1a over the canonical parameter string: every field that can change
/// a non-timing result value contributes; worker count deliberately does
/// not.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn config_hash(cfg: &BenchConfig, index: &BenchIndex) -> u64 {
    let mut s = format!(
        "dataset={};k={};seed={};index={};knob={}",
        cfg.dataset,
        cfg.k,
        cfg.seed,
        index.descriptor(),
        index.knob_name()
    );
    for v in &cfg.sweep {
        s.push_str(&format!(";sweep={v}"));
    }
    for st in &cfg.strategies {
        s.push_str(&format!(";strategy={}", st.descriptor()));
    }
    fnv1a(s.as_bytes())
}

fn to_dco<'a>(
    spec: &StrategySpec,
    art: &BenchArtifacts<'a>,
) -> Result<DcoStrategy<'a>, BenchError> {
    Ok(match spec {
        StrategySpec::Exact => DcoStrategy::Exact,
        StrategySpec::Ads { eps0, delta_d } => DcoStrategy::Ads {
            epsilon0: *eps0,
            delta_d: *delta_d,
        },
        StrategySpec::BsaRes { m, d } => DcoStrategy::BsaRes { m: *m, d: *d },
        StrategySpec::BsaResInc { m, delta_d } => DcoStrategy::BsaResInc {
            m: *m,
            delta_d: *delta_d,
        },
        StrategySpec::LearnedPca => DcoStrategy::LearnedProj {
            cascade: art
                .cascade
                .ok_or(BenchError::MissingArtifact("learned-pca", "cascade"))?,
        },
        StrategySpec::LearnedOpq => DcoStrategy::LearnedQuant {
            classifier: art
                .quant_classifier
                .ok_or(BenchError::MissingArtifact("learned-opq", "classifier"))?,
        },
    })
}

fn run_query(
    index: &BenchIndex,
    q: &[f32],
    k: usize,
    knob: usize,
    dco: &DcoStrategy,
) -> Result<SearchResult, IndexError> {
    match index {
        BenchIndex::Ivf(ix) => ivf_search(ix, q, k, knob, dco),
        BenchIndex::Hnsw(ix) => hnsw_search(ix, q, k, knob, dco),
    }
}

/// Multi-worker wall-clock throughput (queries/second): queries split into
/// contiguous chunks, one worker each; results are discarded, only the wall
/// time matters.
pub fn timed_qps(
    index: &BenchIndex,
    queries: &Dataset,
    k: usize,
    knob: usize,
    dco: &DcoStrategy,
    threads: usize,
) -> Result<f64, BenchError> {
    let n = queries.len();
    let chunk = n.div_ceil(threads.max(1));
    let start = Instant::now();
    std::thread::scope(|scope| -> Result<(), BenchError> {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(n);
            if lo >= hi {
                break;
            }
            handles.push(scope.spawn(move || -> Result<(), IndexError> {
                for qi in lo..hi {
                    run_query(index, queries.row(qi), k, knob, dco)?;
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("bench worker panicked")?;
        }
        Ok(())
    })?;
    Ok(n as f64 / start.elapsed().as_secs_f64().max(1e-12))
}

/// Runs the whole grid; one report row per (strategy, knob).
pub fn run_bench(
    cfg: &BenchConfig,
    index: BenchIndex,
    artifacts: BenchArtifacts,
    queries: &Dataset,
    gt: &GroundTruth,
) -> Result<BenchReport, BenchError> {
    if cfg.k == 0 {
        return Err(BenchError::BadConfig("k must be at least 1"));
    }
    if cfg.sweep.is_empty() || cfg.sweep.contains(&0) {
        return Err(BenchError::BadConfig("sweep values must be positive"));
    }
    if cfg.strategies.is_empty() {
        return Err(BenchError::BadConfig("no strategies selected"));
    }
    if gt.len() != queries.len() || gt.k() < cfg.k {
        return Err(BenchError::BadConfig("ground truth does not cover the query set"));
    }
    let dim = index.dim();
    let threads = cfg.threads.max(1);
    let mut points = Vec::new();

    for spec in &cfg.strategies {
        let dco = to_dco(spec, &artifacts)?;
        for &knob in &cfg.sweep {
            let start = Instant::now();
            let mut recall = 0.0f64;
            let mut scan = 0.0f64;
            let mut pruned = 0.0f64;
            let mut calls = 0.0f64;
            let mut lookups = 0.0f64;
            for qi in 0..queries.len() {
                let r = run_query(&index, queries.row(qi), cfg.k, knob, &dco)?;
                recall += recall_at_k(&r.ids(), gt.ids_row(qi), cfg.k);
                scan += r.scan_rate(dim);
                pruned += r.pruned_rate();
                calls += r.dco_calls as f64;
                lookups += r.lookups_total as f64;
            }
            let qps_1 = queries.len() as f64 / start.elapsed().as_secs_f64().max(1e-12);
            let qps_n = if threads > 1 {
                timed_qps(&index, queries, cfg.k, knob, &dco, threads)?
            } else {
                qps_1
            };
            let nq = queries.len() as f64;
            points.push(BenchPoint {
                strategy: spec.tag().to_string(),
                knob,
                recall: recall / nq,
                qps_1,
                qps_n,
                avg_scan_rate: scan / nq,
                avg_pruned_rate: pruned / nq,
                avg_dco_calls: calls / nq,
                avg_lookups: lookups / nq,
            });
        }
    }

    Ok(BenchReport {
        dataset: cfg.dataset.clone(),
        seed: cfg.seed,
        config_hash: config_hash(cfg, &index),
        knob_name: index.knob_name(),
        points,
    })
}

impl BenchReport {
    /// Machine-readable form: a `#`-prefixed header, then one
    /// tab-separated line per grid point in stable column order.
    pub fn tsv(&self) -> String {
        let mut out = String::from(
            "#dataset\tseed\tconfig\tstrategy\tknob\trecall\tqps_1\tqps_n\tscan_rate\tpruned_rate\tdco_calls\tlookups\n",
        );
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{}\t{:016x}\t{}\t{}\t{:.6}\t{:.1}\t{:.1}\t{:.6}\t{:.6}\t{:.1}\t{:.1}\n",
                self.dataset,
                self.seed,
                self.config_hash,
                p.strategy,
                p.knob,
                p.recall,
                p.qps_1,
                p.qps_n,
                p.avg_scan_rate,
                p.avg_pruned_rate,
                p.avg_dco_calls,
                p.avg_lookups,
            ));
        }
        out
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "dataset {}  seed {}  config {:016x}\n{:<12} {:>6} {:>8} {:>10} {:>10} {:>10} {:>12} {:>10} {:>10}\n",
            self.dataset,
            self.seed,
            self.config_hash,
            "strategy",
            self.knob_name,
            "recall",
            "qps(1)",
            "qps(n)",
            "scan",
            "pruned",
            "dco_calls",
            "lookups"
        );
        for p in &self.points {
            out.push_str(&format!(
                "{:<12} {:>6} {:>8.4} {:>10.1} {:>10.1} {:>10.4} {:>12.4} {:>10.1} {:>10.1}\n",
                p.strategy,
                p.knob,
                p.recall,
                p.qps_1,
                p.qps_n,
                p.avg_scan_rate,
                p.avg_pruned_rate,
                p.avg_dco_calls,
                p.avg_lookups,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fastdco_core::synth::{gen_synthetic, SynthKind};
    use fastdco_core::transform::fit_pca;
    use fastdco_core::{brute_force_knn, ivf_build};

    fn small_setup() -> (IvfIndex, Dataset, GroundTruth) {
        let data = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 3000, 16, 21);
        let rotor = fit_pca(&data, 3000, 22).unwrap();
        let idx = ivf_build(&data, &rotor, 16, 23, None).unwrap();
        let queries = gen_synthetic(SynthKind::Anisotropic { ratio: 0.85 }, 25, 16, 24);
        let gt = brute_force_knn(&data, &queries, 10).unwrap();
        (idx, queries, gt)
    }

    #[test]
    fn exact_is_the_recall_ceiling_and_fields_are_deterministic() {
        let (idx, queries, gt) = small_setup();
        let cfg = BenchConfig {
            dataset: "synthetic".into(),
            k: 10,
            seed: 7,
            threads: 2,
            sweep: vec![4, 16],
            strategies: vec![
                StrategySpec::Exact,
                StrategySpec::BsaResInc { m: 8.0, delta_d: 4 },
            ],
        };
        let art = BenchArtifacts::default();
        let a = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
        let b = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.points.len(), 4);
        for (pa, pb) in a.points.iter().zip(&b.points) {
            // Everything except wall-clock throughput is reproducible.
            assert_eq!(pa.strategy, pb.strategy);
            assert_eq!(pa.knob, pb.knob);
            assert_eq!(pa.recall, pb.recall);
            assert_eq!(pa.avg_scan_rate, pb.avg_scan_rate);
            assert_eq!(pa.avg_pruned_rate, pb.avg_pruned_rate);
            assert_eq!(pa.avg_dco_calls, pb.avg_dco_calls);
            assert!(pa.recall >= 0.0 && pa.recall <= 1.0);
            assert!(pa.avg_scan_rate >= 0.0 && pa.avg_scan_rate <= 1.0);
            assert!(pa.avg_pruned_rate >= 0.0 && pa.avg_pruned_rate <= 1.0);
        }
        // Exact at the same knob is the ceiling for the pruning strategy.
        for i in 0..2 {
            let exact = &a.points[i];
            let inc = &a.points[i + 2];
            assert_eq!(exact.knob, inc.knob);
            assert!(inc.recall <= exact.recall + 0.001);
        }
        // Monotone knob for exact: more probes never lose recall.
        assert!(a.points[1].recall >= a.points[0].recall);
    }

    #[test]
    fn equal_hash_means_equal_grid_and_changed_config_changes_hash() {
        let (idx, queries, gt) = small_setup();
        let mut cfg = BenchConfig {
            dataset: "synthetic".into(),
            k: 10,
            seed: 7,
            threads: 1,
            sweep: vec![4],
            strategies: vec![StrategySpec::Exact],
        };
        let art = BenchArtifacts::default();
        let a = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
        cfg.threads = 4; // timing-only knob: same hash
        let b = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        cfg.sweep = vec![8];
        let c = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }

    #[test]
    fn missing_artifacts_and_bad_configs_are_rejected() {
        let (idx, queries, gt) = small_setup();
        let art = BenchArtifacts::default();
        let cfg = BenchConfig {
            dataset: "synthetic".into(),
            k: 10,
            seed: 7,
            threads: 1,
            sweep: vec![4],
            strategies: vec![StrategySpec::LearnedPca],
        };
        let err = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap_err();
        assert!(matches!(err, BenchError::MissingArtifact(_, _)), "{err}");

        let cfg = BenchConfig {
            dataset: "synthetic".into(),
            k: 0,
            seed: 7,
            threads: 1,
            sweep: vec![4],
            strategies: vec![StrategySpec::Exact],
        };
        assert!(run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).is_err());

        let report_tsv_has_rows = {
            let cfg = BenchConfig {
                dataset: "synthetic".into(),
                k: 10,
                seed: 7,
                threads: 1,
                sweep: vec![4],
                strategies: vec![StrategySpec::Exact],
            };
            let r = run_bench(&cfg, BenchIndex::Ivf(&idx), art, &queries, &gt).unwrap();
            let tsv = r.tsv();
            tsv.lines().count() == 2 && tsv.starts_with('#') && !r.table().is_empty()
        };
        assert!(report_tsv_has_rows);
    }
}
