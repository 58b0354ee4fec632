use std::path::Path;
use std::process::{Command, Output};

fn basketseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basketseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn staged_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&basketseg(&["simulate", "--n-per-type", "15", "--n-items", "300", "--seed", "3", "--out", s(d)]));
    for f in ["full.csv", "train.csv", "test_manifest.csv", "labels.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let labels = std::fs::read_to_string(d.join("labels.csv")).unwrap();
    assert!(labels.starts_with("user_id,type\nc0000,A\n"));

    let train = d.join("train.csv");
    ok(&basketseg(&["cluster", "--train", s(&train), "--distance", "madd", "--k-range", "2,4", "--out", s(d)]));
    let model = std::fs::read_to_string(d.join("model.txt")).unwrap();
    let k: usize = model.lines().next().unwrap().strip_prefix("k=").unwrap().parse().unwrap();
    assert!((2..=4).contains(&k), "{model}");
    ok(&basketseg(&["cluster", "--train", s(&train), "--distance", "jaccard", "--k", "2", "--out", s(d)]));
    let model = std::fs::read_to_string(d.join("model.txt")).unwrap();
    assert!(model.starts_with("k=2\n"), "{model}");

    ok(&basketseg(&[
        "recommend", "--train", s(&train), "--model", s(&d.join("model.txt")), "--method", "expprofit", "--out", s(d),
    ]));
    let recs = std::fs::read_to_string(d.join("recommendations.csv")).unwrap();
    assert_eq!(recs.lines().next(), Some("user_id,rank,item_id,score"));
    // lists shrink only when a cluster has fewer than L unowned items
    let rows = recs.lines().count() - 1;
    assert!(rows > 0 && rows <= 30 * 10, "{rows}");

    let out = basketseg(&[
        "evaluate",
        "--train",
        s(&train),
        "--test",
        s(&d.join("test_manifest.csv")),
        "--recommendations",
        s(&d.join("recommendations.csv")),
        "--out",
        s(d),
    ]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("precision@10="), "{stdout}");
    assert!(d.join("evaluation.csv").exists());
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "scenario = II\nn_per_type = 12\np = 200\nruns = 2\nk_range = 2,4\ndistances = madd, jaccard\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&basketseg(&["experiment", "--config", s(&cfg), "--seed", "7", "--out", s(&a)]));
    ok(&basketseg(&["experiment", "--config", s(&cfg), "--seed", "7", "--out", s(&b), "--sequential"]));
    for f in ["results.csv", "runs_detail.csv", "clustering.csv", "clustering_summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let detail = std::fs::read_to_string(a.join("runs_detail.csv")).unwrap();
    assert!(detail.starts_with(
        "scenario,method,metric_kind,distance,precision,ndcg,ndcv,users_evaluated,users_skipped,run_seed\n"
    ));
}

#[test]
fn ingest_generic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("log.csv");
    let mut text = String::from("user_id,item_id,expenditure\n");
    for u in 0..6 {
        for j in 0..5 {
            text.push_str(&format!("u{u},i{},{}\n", (u + j) % 8, 1 + u + j));
        }
    }
    std::fs::write(&input, text).unwrap();
    let out = basketseg(&["ingest", "--input", s(&input), "--mask-fraction", "0.4", "--out", s(dir.path())]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("customers=6 products=8"));
}

#[test]
fn bench_writes_timings() {
    let dir = tempfile::tempdir().unwrap();
    ok(&basketseg(&[
        "bench", "--metrics", "euclidean,jaccard", "--sizes", "20,40", "--p", "100", "--repeats", "1", "--out",
        s(dir.path()),
    ]));
    let t = std::fs::read_to_string(dir.path().join("timings.csv")).unwrap();
    assert!(t.starts_with("metric,n,p,median_secs\n"));
    assert!(t.contains("Jaccard,slope_n,,"));
}

#[test]
fn exit_codes() {
    assert_eq!(basketseg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(basketseg(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "runs = 0\n").unwrap();
    assert_eq!(basketseg(&["experiment", "--config", s(&cfg)]).status.code(), Some(1));
    let missing = dir.path().join("nope.csv");
    assert_eq!(basketseg(&["cluster", "--train", s(&missing)]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "user_id,item_id,expenditure\nu1,i1,-3\n").unwrap();
    assert_eq!(basketseg(&["ingest", "--input", s(&bad), "--out", s(dir.path())]).status.code(), Some(2));
}
