//! `fastdco` command line: dataset generation, ground truth, transform and
//! classifier training, index building, single searches, and benchmark
//! sweeps.
//!
//! Every subcommand that takes `--seed` can be overridden globally with the
//! `FASTDCO_SEED` environment variable, which takes precedence when set.

use std::error::Error;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastdco::bench::{run_bench, timed_qps, BenchArtifacts, BenchConfig, BenchIndex, StrategySpec};
use fastdco::serial::{
    load_cascade, load_classifier, load_codebook, load_hnsw, load_ivf, load_rotor, save_cascade,
    save_classifier, save_codebook, save_hnsw, save_ivf, save_rotor, SerialError,
};
use fastdco::vecio::{read_fvecs, read_ground_truth, write_fvecs, write_ground_truth, write_ivecs};
use fastdco_core::learn::{Cascade, LinearClassifier};
use fastdco_core::synth::{gen_synthetic, SynthKind};
use fastdco_core::transform::{fit_pca, fit_random_rotor, identity_rotor, measure_sigma2};
use fastdco_core::{
    brute_force_knn, build_cascade, hnsw_build, hnsw_search, ivf_build, ivf_search, opq_train,
    pq_train, recall_at_k, train_quant_classifier, DcoStrategy, HnswIndex, IvfIndex,
};

#[derive(Parser)]
#[command(
    name = "fastdco",
    version,
    about = "Fast distance-computation operators for approximate nearest-neighbor search"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DcoName {
    Exact,
    Ads,
    Bsa,
    BsaInc,
    LearnedPca,
    LearnedOpq,
}

#[derive(Copy, Clone, ValueEnum)]
enum SynthName {
    Isotropic,
    Anisotropic,
    Clustered,
}

#[derive(Copy, Clone, ValueEnum)]
enum RotorName {
    Pca,
    Random,
    Identity,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum IndexName {
    Ivf,
    Hnsw,
}

/// Tuning knobs shared by every approximate strategy; each strategy reads
/// only the ones it understands.
#[derive(Args)]
struct StrategyParams {
    /// Quantile multiplier for the bsa / bsa-inc error bound.
    #[arg(long, default_value_t = 8.0)]
    m: f32,
    /// Initial error-bound scale for ads.
    #[arg(long, default_value_t = 2.1)]
    eps0: f32,
    /// Checkpoint spacing in dimensions for ads / bsa-inc.
    #[arg(long, default_value_t = 32)]
    delta_d: usize,
    /// Fixed projection dimension for bsa (default: half the data
    /// dimension).
    #[arg(long)]
    d: Option<usize>,
    /// Trained cascade file (required by learned-pca).
    #[arg(long)]
    cascade: Option<PathBuf>,
    /// Trained classifier file (required by learned-opq).
    #[arg(long)]
    classifier: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset and write it as .fvecs.
    GenData {
        #[arg(long, value_enum, default_value_t = SynthName::Anisotropic)]
        kind: SynthName,
        /// Number of vectors.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        /// Geometric per-dimension std decay for the anisotropic kind.
        #[arg(long, default_value_t = 0.9)]
        ratio: f32,
        /// Number of Gaussian blobs for the clustered kind.
        #[arg(long, default_value_t = 16)]
        centers: usize,
        /// Per-coordinate noise std around each center (clustered kind).
        #[arg(long, default_value_t = 1.0)]
        spread: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute exact K-nearest neighbors; writes <out>.ivecs (ids) and
    /// <out>.fvecs (squared distances).
    GroundTruth {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Output path stem (extensions are appended).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a rotation (PCA, random orthogonal, or identity) with
    /// per-dimension variances measured for residual error bounds.
    FitTransform {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = RotorName::Pca)]
        kind: RotorName,
        /// Training-sample size for PCA.
        #[arg(long, default_value_t = 4096)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a product-quantization codebook (OPQ by default).
    TrainQuant {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 16)]
        num_subspaces: usize,
        #[arg(long, default_value_t = 8)]
        nbits: u8,
        /// Outer OPQ rotation iterations; 0 trains plain PQ.
        #[arg(long, default_value_t = 10)]
        opq_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an IVF or HNSW index over a dataset with a fitted rotor.
    BuildIndex {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        rotor: PathBuf,
        #[arg(long, value_enum)]
        kind: IndexName,
        /// Number of IVF partitions.
        #[arg(long, default_value_t = 256)]
        nlist: usize,
        /// Codebook file; stores quantized codes in the IVF index for
        /// learned-opq search.
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// HNSW degree bound.
        #[arg(long = "M", default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        ef_construction: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a pruning classifier: a per-checkpoint cascade for learned-pca
    /// or a single classifier over quantized distances for learned-opq.
    TrainClassifier {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        rotor: PathBuf,
        /// Which learned strategy to train for: learned-pca or learned-opq.
        #[arg(long, value_enum)]
        dco: DcoName,
        /// Codebook file (required for learned-opq).
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Checkpoint spacing of the cascade (learned-pca).
        #[arg(long, default_value_t = 32)]
        delta_d: usize,
        /// Neighbor count the training labels target.
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Label-0 recall each stage must keep during calibration.
        #[arg(long, default_value_t = 0.995)]
        target_recall: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one query set through an index with one strategy and print
    /// recall/throughput/pruning metrics.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Ground-truth path stem (enables recall reporting).
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DcoName::Exact)]
        dco: DcoName,
        #[command(flatten)]
        params: StrategyParams,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// IVF partitions probed (ignored for HNSW).
        #[arg(long, default_value_t = 16)]
        nprobe: usize,
        /// HNSW beam width (ignored for IVF).
        #[arg(long, default_value_t = 100)]
        ef: usize,
        /// Workers for the throughput pass.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Write result ids as .ivecs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a search-width knob over one or more strategies and emit a
    /// table plus tab-separated lines.
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Ground-truth path stem.
        #[arg(long)]
        gt: PathBuf,
        /// Dataset label written into the report.
        #[arg(long, default_value = "dataset")]
        dataset: String,
        /// Strategies to sweep (repeat or comma-separate).
        #[arg(long = "dco", value_enum, value_delimiter = ',', required = true)]
        dcos: Vec<DcoName>,
        #[command(flatten)]
        params: StrategyParams,
        /// IVF sweep values (ignored for HNSW).
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16, 32, 64])]
        nprobe: Vec<usize>,
        /// HNSW sweep values (ignored for IVF).
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 40, 80, 160])]
        ef: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Report metadata seed (searches themselves are deterministic).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Also write the tab-separated lines to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// `FASTDCO_SEED` wins over any `--seed` flag when set.
fn effective_seed(flag: u64) -> Result<u64, Box<dyn Error>> {
    match std::env::var("FASTDCO_SEED") {
        Ok(s) => Ok(s
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("FASTDCO_SEED must be a u64: {e}"))?),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(e.into()),
    }
}

enum AnyIndex {
    Ivf(IvfIndex),
    Hnsw(HnswIndex),
}

impl AnyIndex {
    fn as_bench(&self) -> BenchIndex<'_> {
        match self {
            AnyIndex::Ivf(ix) => BenchIndex::Ivf(ix),
            AnyIndex::Hnsw(ix) => BenchIndex::Hnsw(ix),
        }
    }

    fn dim(&self) -> usize {
        match self {
            AnyIndex::Ivf(ix) => ix.dim(),
            AnyIndex::Hnsw(ix) => ix.dim(),
        }
    }
}

/// Index files self-identify by magic, so the kind flag is only needed at
/// build time.
fn load_index(path: &PathBuf) -> Result<AnyIndex, SerialError> {
    match load_ivf(path) {
        Ok(ix) => Ok(AnyIndex::Ivf(ix)),
        Err(SerialError::BadMagic { .. }) => Ok(AnyIndex::Hnsw(load_hnsw(path)?)),
        Err(e) => Err(e),
    }
}

/// Loads whatever artifacts the selected strategies need.
fn load_artifacts(
    dcos: &[DcoName],
    params: &StrategyParams,
) -> Result<(Option<Cascade>, Option<LinearClassifier>), Box<dyn Error>> {
    let cascade = if dcos.contains(&DcoName::LearnedPca) {
        let path = params
            .cascade
            .as_ref()
            .ok_or("--cascade is required for learned-pca")?;
        Some(load_cascade(path)?)
    } else {
        None
    };
    let classifier = if dcos.contains(&DcoName::LearnedOpq) {
        let path = params
            .classifier
            .as_ref()
            .ok_or("--classifier is required for learned-opq")?;
        Some(load_classifier(path)?)
    } else {
        None
    };
    Ok((cascade, classifier))
}

fn to_spec(name: DcoName, p: &StrategyParams, dim: usize) -> StrategySpec {
    match name {
        DcoName::Exact => StrategySpec::Exact,
        DcoName::Ads => StrategySpec::Ads {
            eps0: p.eps0,
            delta_d: p.delta_d,
        },
        DcoName::Bsa => StrategySpec::BsaRes {
            m: p.m,
            d: p.d.unwrap_or((dim / 2).max(1)),
        },
        DcoName::BsaInc => StrategySpec::BsaResInc {
            m: p.m,
            delta_d: p.delta_d,
        },
        DcoName::LearnedPca => StrategySpec::LearnedPca,
        DcoName::LearnedOpq => StrategySpec::LearnedOpq,
    }
}

fn build_dco<'a>(
    name: DcoName,
    p: &StrategyParams,
    dim: usize,
    cascade: &'a Option<Cascade>,
    classifier: &'a Option<LinearClassifier>,
) -> Result<DcoStrategy<'a>, Box<dyn Error>> {
    Ok(match name {
        DcoName::Exact => DcoStrategy::Exact,
        DcoName::Ads => DcoStrategy::Ads {
            epsilon0: p.eps0,
            delta_d: p.delta_d,
        },
        DcoName::Bsa => DcoStrategy::BsaRes {
            m: p.m,
            d: p.d.unwrap_or((dim / 2).max(1)),
        },
        DcoName::BsaInc => DcoStrategy::BsaResInc {
            m: p.m,
            delta_d: p.delta_d,
        },
        DcoName::LearnedPca => DcoStrategy::LearnedProj {
            cascade: cascade.as_ref().ok_or("--cascade is required for learned-pca")?,
        },
        DcoName::LearnedOpq => DcoStrategy::LearnedQuant {
            classifier: classifier
                .as_ref()
                .ok_or("--classifier is required for learned-opq")?,
        },
    })
}

fn run() -> Result<(), Box<dyn Error>> {
    match Cli::parse().cmd {
        Cmd::GenData {
            kind,
            n,
            dim,
            ratio,
            centers,
            spread,
            seed,
            out,
        } => {
            let kind = match kind {
                SynthName::Isotropic => SynthKind::Isotropic,
                SynthName::Anisotropic => SynthKind::Anisotropic { ratio },
                SynthName::Clustered => SynthKind::Clustered { centers, spread },
            };
            let data = gen_synthetic(kind, n, dim, effective_seed(seed)?);
            write_fvecs(&out, &data)?;
            println!("wrote {}x{} vectors to {}", data.len(), data.dim(), out.display());
        }
        Cmd::GroundTruth {
            dataset,
            queries,
            k,
            out,
        } => {
            let data = read_fvecs(&dataset)?;
            let q = read_fvecs(&queries)?;
            let gt = brute_force_knn(&data, &q, k)?;
            write_ground_truth(&out, &gt)?;
            println!(
                "wrote exact {}-NN for {} queries to {}.{{ivecs,fvecs}}",
                k,
                q.len(),
                out.display()
            );
        }
        Cmd::FitTransform {
            dataset,
            kind,
            sample,
            seed,
            out,
        } => {
            let data = read_fvecs(&dataset)?;
            let seed = effective_seed(seed)?;
            let rotor = match kind {
                RotorName::Pca => fit_pca(&data, sample, seed)?,
                RotorName::Random => {
                    let mut r = fit_random_rotor(data.dim(), seed);
                    r.set_sigma2(measure_sigma2(&r, &data)?);
                    r
                }
                RotorName::Identity => {
                    let mut r = identity_rotor(data.dim());
                    r.set_sigma2(measure_sigma2(&r, &data)?);
                    r
                }
            };
            save_rotor(&out, &rotor)?;
            println!(
                "wrote {:?} rotor dim {} (orthogonality defect {:.2e}) to {}",
                rotor.kind(),
                rotor.dim(),
                rotor.orthogonality_defect(),
                out.display()
            );
        }
        Cmd::TrainQuant {
            dataset,
            num_subspaces,
            nbits,
            opq_iters,
            seed,
            out,
        } => {
            let data = read_fvecs(&dataset)?;
            let seed = effective_seed(seed)?;
            let cb = if opq_iters == 0 {
                pq_train(&data, num_subspaces, nbits, seed)?
            } else {
                opq_train(&data, num_subspaces, nbits, opq_iters, seed)?
            };
            save_codebook(&out, &cb)?;
            println!(
                "wrote codebook: {} subspaces x {} centroids (dim {}) to {}",
                cb.num_subspaces(),
                cb.k(),
                cb.dim(),
                out.display()
            );
        }
        Cmd::BuildIndex {
            dataset,
            rotor,
            kind,
            nlist,
            codebook,
            m,
            ef_construction,
            seed,
            out,
        } => {
            let data = read_fvecs(&dataset)?;
            let rotor = load_rotor(&rotor)?;
            let seed = effective_seed(seed)?;
            match kind {
                IndexName::Ivf => {
                    let cb = match &codebook {
                        Some(path) => Some(load_codebook(path)?),
                        None => None,
                    };
                    let idx = ivf_build(&data, &rotor, nlist, seed, cb.as_ref())?;
                    save_ivf(&out, &idx)?;
                    println!(
                        "wrote IVF index: {} vectors, {} lists{} to {}",
                        idx.len(),
                        idx.nlist(),
                        if cb.is_some() { ", with codes" } else { "" },
                        out.display()
                    );
                }
                IndexName::Hnsw => {
                    if codebook.is_some() {
                        return Err("--codebook is only supported with --kind ivf".into());
                    }
                    let idx = hnsw_build(&data, &rotor, m, ef_construction, seed)?;
                    save_hnsw(&out, &idx)?;
                    println!(
                        "wrote HNSW index: {} vectors, M={}, top level {} to {}",
                        idx.len(),
                        idx.m(),
                        idx.max_level(),
                        out.display()
                    );
                }
            }
        }
        Cmd::TrainClassifier {
            dataset,
            rotor,
            dco,
            codebook,
            delta_d,
            k,
            target_recall,
            seed,
            out,
        } => {
            let data = read_fvecs(&dataset)?;
            let rotor = load_rotor(&rotor)?;
            let seed = effective_seed(seed)?;
            match dco {
                DcoName::LearnedPca => {
                    let cascade = build_cascade(&data, &rotor, delta_d, k, target_recall, seed)?;
                    save_cascade(&out, &cascade)?;
                    println!(
                        "wrote cascade: {} stages, spacing {} to {}",
                        cascade.stages.len(),
                        cascade.delta_d,
                        out.display()
                    );
                }
                DcoName::LearnedOpq => {
                    let path = codebook.ok_or("--codebook is required for learned-opq")?;
                    let cb = load_codebook(&path)?;
                    let clf = train_quant_classifier(&data, &rotor, &cb, k, target_recall, seed)?;
                    save_classifier(&out, &clf)?;
                    println!("wrote quantized-distance classifier to {}", out.display());
                }
                _ => return Err("train-classifier expects --dco learned-pca or learned-opq".into()),
            }
        }
        Cmd::Search {
            index,
            queries,
            gt,
            dco,
            params,
            k,
            nprobe,
            ef,
            threads,
            out,
        } => {
            let idx = load_index(&index)?;
            let q = read_fvecs(&queries)?;
            let dim = idx.dim();
            let (cascade, classifier) = load_artifacts(&[dco], &params)?;
            let strat = build_dco(dco, &params, dim, &cascade, &classifier)?;
            let knob = match idx {
                AnyIndex::Ivf(_) => nprobe,
                AnyIndex::Hnsw(_) => ef,
            };

            let mut all_ids: Vec<i32> = Vec::with_capacity(q.len() * k);
            let mut scan = 0.0f64;
            let mut pruned = 0.0f64;
            let mut calls = 0.0f64;
            let start = Instant::now();
            for qi in 0..q.len() {
                let r = match &idx {
                    AnyIndex::Ivf(ix) => ivf_search(ix, q.row(qi), k, knob, &strat)?,
                    AnyIndex::Hnsw(ix) => hnsw_search(ix, q.row(qi), k, knob, &strat)?,
                };
                scan += r.scan_rate(dim);
                pruned += r.pruned_rate();
                calls += r.dco_calls as f64;
                all_ids.extend(r.ids().iter().map(|&id| id as i32));
            }
            let qps_1 = q.len() as f64 / start.elapsed().as_secs_f64().max(1e-12);
            let nq = q.len() as f64;

            println!(
                "{} queries, k={}, {}={}",
                q.len(),
                k,
                idx.as_bench().knob_name(),
                knob
            );
            if let Some(stem) = gt {
                let truth = read_ground_truth(&stem)?;
                if truth.len() != q.len() || truth.k() < k {
                    return Err("ground truth does not cover the query set".into());
                }
                let mut recall = 0.0;
                for qi in 0..q.len() {
                    let ids: Vec<u32> =
                        all_ids[qi * k..(qi + 1) * k].iter().map(|&v| v as u32).collect();
                    recall += recall_at_k(&ids, truth.ids_row(qi), k);
                }
                println!("recall@{k} {:.4}", recall / nq);
            }
            print!("qps(1) {qps_1:.1}");
            if threads > 1 {
                let qps_n = timed_qps(&idx.as_bench(), &q, k, knob, &strat, threads)?;
                print!("  qps({threads}) {qps_n:.1}");
            }
            println!();
            println!(
                "scan_rate {:.4}  pruned_rate {:.4}  dco_calls {:.1}",
                scan / nq,
                pruned / nq,
                calls / nq
            );
            if let Some(path) = out {
                write_ivecs(&path, k, &all_ids)?;
                println!("wrote result ids to {}", path.display());
            }
        }
        Cmd::Bench {
            index,
            queries,
            gt,
            dataset,
            dcos,
            params,
            nprobe,
            ef,
            k,
            seed,
            threads,
            out,
        } => {
            let idx = load_index(&index)?;
            let q = read_fvecs(&queries)?;
            let truth = read_ground_truth(&gt)?;
            let dim = idx.dim();
            let (cascade, classifier) = load_artifacts(&dcos, &params)?;
            let sweep = match idx {
                AnyIndex::Ivf(_) => nprobe,
                AnyIndex::Hnsw(_) => ef,
            };
            let cfg = BenchConfig {
                dataset,
                k,
                seed: effective_seed(seed)?,
                threads,
                sweep,
                strategies: dcos.iter().map(|&d| to_spec(d, &params, dim)).collect(),
            };
            let art = BenchArtifacts {
                cascade: cascade.as_ref(),
                quant_classifier: classifier.as_ref(),
            };
            let report = run_bench(&cfg, idx.as_bench(), art, &q, &truth)?;
            print!("{}", report.table());
            print!("{}", report.tsv());
            if let Some(path) = out {
                std::fs::write(&path, report.tsv())?;
                println!("wrote tsv to {}", path.display());
            }
        }
    }
    Ok(())
}
