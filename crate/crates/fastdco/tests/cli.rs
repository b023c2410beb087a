//! End-to-end tests of the compiled binary: the full artifact pipeline from
//! synthetic data to a benchmark report, exercised exactly as a user would.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fastdco"))
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn run(args: &[&str]) -> String {
    ok(&bin().args(args).output().unwrap())
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn pipeline_from_gen_data_to_bench_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    run(&["gen-data", "--kind", "anisotropic", "--n", "4000", "--dim", "24",
          "--seed", "1", "--out", &p(d, "base.fvecs")]);
    run(&["gen-data", "--kind", "anisotropic", "--n", "30", "--dim", "24",
          "--seed", "2", "--out", &p(d, "q.fvecs")]);
    run(&["ground-truth", "--dataset", &p(d, "base.fvecs"), "--queries", &p(d, "q.fvecs"),
          "--k", "20", "--out", &p(d, "gt")]);
    assert!(d.join("gt.ivecs").exists() && d.join("gt.fvecs").exists());

    run(&["fit-transform", "--dataset", &p(d, "base.fvecs"), "--kind", "pca",
          "--seed", "3", "--out", &p(d, "pca.rt")]);
    run(&["train-quant", "--dataset", &p(d, "base.fvecs"), "--num-subspaces", "6",
          "--nbits", "6", "--opq-iters", "2", "--seed", "4", "--out", &p(d, "cb.bin")]);
    run(&["build-index", "--dataset", &p(d, "base.fvecs"), "--rotor", &p(d, "pca.rt"),
          "--kind", "ivf", "--nlist", "16", "--codebook", &p(d, "cb.bin"),
          "--seed", "5", "--out", &p(d, "ivf.idx")]);
    run(&["train-classifier", "--dataset", &p(d, "base.fvecs"), "--rotor", &p(d, "pca.rt"),
          "--dco", "learned-pca", "--delta-d", "6", "--k", "10",
          "--target-recall", "0.99", "--seed", "6", "--out", &p(d, "cascade.txt")]);
    run(&["train-classifier", "--dataset", &p(d, "base.fvecs"), "--rotor", &p(d, "pca.rt"),
          "--dco", "learned-opq", "--codebook", &p(d, "cb.bin"), "--k", "10",
          "--target-recall", "0.99", "--seed", "7", "--out", &p(d, "clf.txt")]);

    // Exact search with full probing recovers the ground truth exactly.
    let out = run(&["search", "--index", &p(d, "ivf.idx"), "--queries", &p(d, "q.fvecs"),
                    "--gt", &p(d, "gt"), "--dco", "exact", "--k", "10", "--nprobe", "16",
                    "--out", &p(d, "ids.ivecs")]);
    assert!(out.contains("recall@10 1.0000"), "{out}");
    assert!(d.join("ids.ivecs").exists());

    // The pruning strategy on the same candidates keeps the same recall line.
    let out = run(&["search", "--index", &p(d, "ivf.idx"), "--queries", &p(d, "q.fvecs"),
                    "--gt", &p(d, "gt"), "--dco", "bsa-inc", "--m", "8", "--delta-d", "6",
                    "--k", "10", "--nprobe", "16", "--threads", "2"]);
    assert!(out.contains("recall@10 1.0000"), "{out}");
    assert!(out.contains("qps(2)"), "{out}");

    // Bench over three strategies emits the table and one TSV row per point.
    let out = run(&["bench", "--index", &p(d, "ivf.idx"), "--queries", &p(d, "q.fvecs"),
                    "--gt", &p(d, "gt"), "--dataset", "clitest",
                    "--dco", "exact,learned-pca,learned-opq",
                    "--cascade", &p(d, "cascade.txt"), "--classifier", &p(d, "clf.txt"),
                    "--nprobe", "4,16", "--k", "10", "--threads", "2",
                    "--out", &p(d, "report.tsv")]);
    let tsv = std::fs::read_to_string(d.join("report.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 3 * 2, "{tsv}");
    assert!(tsv.lines().next().unwrap().starts_with('#'));
    for line in tsv.lines().skip(1) {
        assert_eq!(line.split('\t').count(), 12, "{line}");
        assert!(line.starts_with("clitest\t"));
    }
    assert!(out.contains("strategy"), "{out}");

    // Exact at nprobe=16 in the report must show recall 1.
    let exact16 = tsv.lines().find(|l| l.contains("\texact\t16\t")).unwrap();
    let recall: f64 = exact16.split('\t').nth(5).unwrap().parse().unwrap();
    assert_eq!(recall, 1.0);
}

#[test]
fn hnsw_pipeline_and_index_sniffing() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    run(&["gen-data", "--kind", "clustered", "--centers", "6", "--spread", "8",
          "--n", "3000", "--dim", "16", "--seed", "11", "--out", &p(d, "base.fvecs")]);
    run(&["gen-data", "--kind", "clustered", "--centers", "6", "--spread", "8",
          "--n", "25", "--dim", "16", "--seed", "12", "--out", &p(d, "q.fvecs")]);
    run(&["ground-truth", "--dataset", &p(d, "base.fvecs"), "--queries", &p(d, "q.fvecs"),
          "--k", "10", "--out", &p(d, "gt")]);
    run(&["fit-transform", "--dataset", &p(d, "base.fvecs"), "--kind", "pca",
          "--seed", "13", "--out", &p(d, "pca.rt")]);
    // HNSW build: the search subcommand must auto-detect the index kind.
    run(&["build-index", "--dataset", &p(d, "base.fvecs"), "--rotor", &p(d, "pca.rt"),
          "--kind", "hnsw", "--M", "16", "--ef-construction", "100",
          "--seed", "14", "--out", &p(d, "hnsw.idx")]);
    let recall_of = |dco_args: &[&str]| -> f64 {
        let mut args = ["search", "--index", &p(d, "hnsw.idx"), "--queries",
                            &p(d, "q.fvecs"), "--gt", &p(d, "gt"), "--k", "5", "--ef", "80"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        args.extend(dco_args.iter().map(|s| s.to_string()));
        let out = ok(&bin().args(&args).output().unwrap());
        assert!(out.contains("ef=80"), "{out}");
        out.lines()
            .find(|l| l.starts_with("recall@5"))
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let exact = recall_of(&["--dco", "exact"]);
    let bsa = recall_of(&["--dco", "bsa-inc", "--m", "8", "--delta-d", "4"]);
    // The graph bounds recall; the pruning operator must not lose more
    // than noise relative to exact traversal of the same graph.
    assert!(exact >= 0.85, "hnsw exact recall {exact}");
    assert!(bsa >= exact - 0.02, "bsa-inc {bsa} vs exact {exact}");
}

#[test]
fn env_seed_overrides_flag_and_errors_are_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    // Same FASTDCO_SEED with different --seed flags → identical bytes.
    for (name, flag_seed) in [("a.fvecs", "1"), ("b.fvecs", "999")] {
        let out = bin()
            .args(["gen-data", "--n", "100", "--dim", "8", "--seed", flag_seed,
                   "--out", &p(d, name)])
            .env("FASTDCO_SEED", "42")
            .output()
            .unwrap();
        ok(&out);
    }
    let a = std::fs::read(d.join("a.fvecs")).unwrap();
    let b = std::fs::read(d.join("b.fvecs")).unwrap();
    assert_eq!(a, b);

    // Without the env var, different seeds give different data.
    run(&["gen-data", "--n", "100", "--dim", "8", "--seed", "1", "--out", &p(d, "c.fvecs")]);
    let c = std::fs::read(d.join("c.fvecs")).unwrap();
    assert_ne!(a, c);

    // A bad env seed fails with a clear message, not a panic.
    let out = bin()
        .args(["gen-data", "--n", "10", "--dim", "4", "--out", &p(d, "x.fvecs")])
        .env("FASTDCO_SEED", "not-a-number")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("FASTDCO_SEED"), "{err}");

    // Missing artifact: learned-pca search without --cascade.
    let out = bin()
        .args(["search", "--index", &p(d, "missing.idx"), "--queries", &p(d, "a.fvecs"),
               "--dco", "learned-pca", "--k", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    // An fvecs file is not an index; the sniffer must reject it cleanly.
    let out = bin()
        .args(["search", "--index", &p(d, "a.fvecs"), "--queries", &p(d, "a.fvecs"),
               "--dco", "exact", "--k", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:"), "{err}");
}
