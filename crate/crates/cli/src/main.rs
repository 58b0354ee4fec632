//! `basketseg` command-line driver.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use basketseg::clustering::{read_model, write_model, DEFAULT_RESTARTS};
use basketseg::harness::{bench_similarity, run_experiment, write_timings, ExperimentConfig, Source};
use basketseg::interaction::{
    read_matrix_csv, read_split_manifest, read_transactions, write_matrix_csv, write_split_manifest,
    RetailFilter,
};
use basketseg::metrics::{evaluate, EvalReport};
use basketseg::recommend::recommend_all;
use basketseg::synthgen::generate;
use basketseg::{
    build_matrices, exec, pairwise, pam, select_k, silhouette, split_by_masking, Error, Exec, KRange,
    Method, MetricKind, RecommendationList, Result, Scenario, ScenarioSpec, ValueIdeal,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "basketseg", version, about = "Basket segmentation and value-aware recommendation")]
struct Cli {
    /// Experiment or scenario configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic population and its train/test split.
    Simulate(SimulateArgs),
    /// Read a transaction CSV, build matrices and mask a test split.
    Ingest(IngestArgs),
    /// Cluster the users of a matrix CSV.
    Cluster(ClusterArgs),
    /// Write top-L lists for every user of a clustered matrix.
    Recommend(RecommendArgs),
    /// Score recommendation lists against a held-out manifest.
    Evaluate(EvaluateArgs),
    /// Repeated end-to-end runs from a configuration file.
    Experiment,
    /// Time dissimilarity construction over a range of sizes.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    n_per_type: Option<usize>,
    #[arg(long)]
    n_items: Option<usize>,
    /// Heterogeneity interval as `lo,hi`.
    #[arg(long, value_parser = parse_pair)]
    theta: Option<(f64, f64)>,
    /// Held-out fraction of each basket.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Online Retail II export or generic `user_id,item_id,expenditure` CSV.
    #[arg(long)]
    input: PathBuf,
    /// Keep every country, date and customer (retail exports only).
    #[arg(long)]
    no_filter: bool,
    #[arg(long, default_value_t = 0.2)]
    mask_fraction: f64,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Matrix CSV to cluster (typically the training matrix).
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "madd")]
    distance: MetricKind,
    /// Fixed number of clusters; otherwise chosen by silhouette.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_usize_pair, default_value = "2,8")]
    k_range: (usize, usize),
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct RecommendArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "popularity")]
    method: Method,
    #[arg(long, short = 'l', default_value_t = 10)]
    l: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    train: PathBuf,
    /// Held-out `user_id,item_id` manifest.
    #[arg(long)]
    test: PathBuf,
    /// Lists written by `recommend`.
    #[arg(long)]
    recommendations: PathBuf,
    #[arg(long, short = 'l', default_value_t = 10)]
    l: usize,
    /// NDCV normalizer: `hits` or `test`.
    #[arg(long, default_value = "hits")]
    ndcv_ideal: ValueIdeal,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "euclidean,cosine,jaccard,madd")]
    metrics: Vec<MetricKind>,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1500)]
    p: usize,
    #[arg(long, default_value_t = 0.01)]
    density: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_usize_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load_config(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    cli.config.as_deref().map(ExperimentConfig::from_file).transpose()
}

fn simulate(cli: &Cli, args: &SimulateArgs, exec: Exec) -> Result<()> {
    let mut spec = match load_config(cli)?.map(|c| c.source) {
        Some(Source::Synthetic(spec)) => spec,
        Some(Source::Retail { .. }) => return Err(Error::Config("simulate needs a synthetic source".into())),
        None => ScenarioSpec::new(Scenario::I),
    };
    if let Some(s) = args.scenario {
        spec.scenario = s;
    }
    if let Some(n) = args.n_per_type {
        spec.n_per_type = n;
    }
    if let Some(p) = args.n_items {
        spec.n_items = p;
    }
    if let Some(t) = args.theta {
        spec.theta = t;
    }
    if let Some(b) = args.beta {
        spec.beta = b;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let data = generate(&spec, exec)?;
    let mut w = create(&cli.out, "full.csv")?;
    write_matrix_csv(&mut w, &data.full)?;
    w.flush()?;
    write_split(&cli.out, &data.split)?;
    let mut w = create(&cli.out, "labels.csv")?;
    data.write_labels(&mut w)?;
    w.flush()?;
    println!(
        "{} users x {} items, {} held out, written to {}",
        data.full.n_users(),
        data.full.n_items(),
        data.split.n_masked(),
        cli.out.display()
    );
    Ok(())
}

fn write_split(dir: &Path, split: &basketseg::SplitMatrices) -> Result<()> {
    let mut w = create(dir, "train.csv")?;
    write_matrix_csv(&mut w, &split.train)?;
    w.flush()?;
    let mut w = create(dir, "test_manifest.csv")?;
    write_split_manifest(&mut w, split)?;
    w.flush()?;
    Ok(())
}

fn ingest(cli: &Cli, args: &IngestArgs) -> Result<()> {
    let filter = if args.no_filter {
        RetailFilter::default()
    } else {
        match load_config(cli)?.map(|c| c.source) {
            Some(Source::Retail { filter, .. }) => filter,
            _ => RetailFilter::uk_summer_2011(),
        }
    };
    let log = read_transactions(&args.input, &filter)?;
    let full = build_matrices(&log)?;
    let split = split_by_masking(&full, args.mask_fraction, cli.seed.unwrap_or(0))?;
    let mut w = create(&cli.out, "full.csv")?;
    write_matrix_csv(&mut w, &full)?;
    w.flush()?;
    write_split(&cli.out, &split)?;
    println!(
        "customers={} products={} sparsity={:.4} train_sparsity={:.4}",
        full.n_users(),
        full.n_items(),
        full.sparsity(),
        split.train.sparsity()
    );
    Ok(())
}

fn cluster(cli: &Cli, args: &ClusterArgs, exec: Exec) -> Result<()> {
    let train = read_matrix_csv(&args.train)?;
    let dm = pairwise(&train, args.distance, exec)?;
    let seed = cli.seed.unwrap_or(0);
    let model = match args.k {
        Some(k) => {
            let mut model = pam(&dm, k, seed)?;
            model.mean_silhouette = silhouette(&dm, &model)?.1;
            model
        }
        None => {
            let (lo, hi) = args.k_range;
            let (model, profile) = select_k(&dm, KRange::new(lo, hi).clamp_to(dm.n()), args.restarts, seed, exec)?;
            for (k, s) in profile {
                log::info!("k={k} mean silhouette {s:.4}");
            }
            model
        }
    };
    let mut w = create(&cli.out, "model.txt")?;
    write_model(&mut w, &model, train.users())?;
    w.flush()?;
    println!("k={} mean_silhouette={:.4}", model.k, model.mean_silhouette);
    Ok(())
}

fn recommend(cli: &Cli, args: &RecommendArgs, exec: Exec) -> Result<()> {
    let train = read_matrix_csv(&args.train)?;
    let model = read_model(BufReader::new(File::open(&args.model)?), train.users())?;
    let lists = recommend_all(&train, &model, args.method, args.l, exec)?;
    let mut w = create(&cli.out, "recommendations.csv")?;
    writeln!(w, "user_id,rank,item_id,score")?;
    for list in &lists {
        for (rank, (&j, s)) in list.items.iter().zip(&list.scores).enumerate() {
            writeln!(w, "{},{},{},{}", train.users()[list.user], rank + 1, train.items()[j], s)?;
        }
    }
    w.flush()?;
    let short = lists.iter().filter(|l| l.truncated).count();
    println!("{} lists written ({} shorter than L={})", lists.len(), short, args.l);
    Ok(())
}

fn read_lists(path: &Path, train: &basketseg::InteractionMatrices, l: usize) -> Result<Vec<RecommendationList>> {
    let text = std::fs::read_to_string(path)?;
    let mut lists: Vec<RecommendationList> = (0..train.n_users())
        .map(|user| RecommendationList {
            user,
            method: Method::Popularity,
            items: Vec::new(),
            scores: Vec::new(),
            l,
            truncated: false,
        })
        .collect();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |msg: &str| Error::Format(format!("{}:{}: {msg}", path.display(), i + 1));
        let f: Vec<&str> = line.split(',').collect();
        let [user, rank, item, score] = f.as_slice() else {
            return Err(bad("expected user_id,rank,item_id,score"));
        };
        let u = train.user_index(user).ok_or_else(|| bad("unknown user"))?;
        let j = train.item_index(item).ok_or_else(|| bad("unknown item"))?;
        let rank: usize = rank.parse().map_err(|_| bad("bad rank"))?;
        let score: f64 = score.parse().map_err(|_| bad("bad score"))?;
        if rank != lists[u].items.len() + 1 {
            return Err(bad("ranks must be consecutive from 1"));
        }
        lists[u].items.push(j);
        lists[u].scores.push(score);
    }
    Ok(lists)
}

fn evaluate_cmd(cli: &Cli, args: &EvaluateArgs) -> Result<()> {
    let train = read_matrix_csv(&args.train)?;
    let mut tests = read_split_manifest(&args.test, &train)?;
    for t in &mut tests {
        t.sort_unstable();
    }
    let lists = read_lists(&args.recommendations, &train, args.l)?;
    let values = train.item_values();
    let r: EvalReport = evaluate(&lists, &tests, &values, args.ndcv_ideal)?;
    let mut w = create(&cli.out, "evaluation.csv")?;
    writeln!(w, "l,precision,ndcg,ndcv,users_evaluated,users_skipped")?;
    writeln!(w, "{},{},{},{},{},{}", r.l, r.precision, r.ndcg, r.ndcv, r.users_evaluated, r.users_skipped)?;
    w.flush()?;
    println!(
        "precision@{l}={:.4} ndcg@{l}={:.4} ndcv@{l}={:.4} users={}",
        r.precision,
        r.ndcg,
        r.ndcv,
        r.users_evaluated,
        l = r.l
    );
    Ok(())
}

fn experiment(cli: &Cli, exec: Exec) -> Result<i32> {
    let mut cfg = load_config(cli)?.ok_or_else(|| Error::Config("experiment needs --config".into()))?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    let out = run_experiment(&cfg, exec)?;
    out.write_all(&cli.out)?;
    for row in out.table.rows.iter().filter(|r| r.metric == "precision") {
        println!("{:<10} {:<9} precision={:.3} ({:.3})", row.method, row.distance, row.mean, row.std);
    }
    match out.failures.first() {
        Some(first) => {
            eprintln!(
                "warning: {} of {} runs failed; results cover the rest. First failure: {first}",
                out.failures.len(),
                cfg.runs
            );
            Ok(first.exit_code())
        }
        None => Ok(0),
    }
}

fn bench(cli: &Cli, args: &BenchArgs, exec: Exec) -> Result<()> {
    let sizes: Vec<(usize, usize)> = args.sizes.iter().map(|&n| (n, args.p)).collect();
    let mut rows = Vec::new();
    for &metric in &args.metrics {
        rows.extend(bench_similarity(&sizes, metric, args.density, args.repeats, cli.seed.unwrap_or(0), exec)?);
    }
    let mut w = create(&cli.out, "timings.csv")?;
    write_timings(&mut w, &rows)?;
    w.flush()?;
    let mut stdout = std::io::stdout().lock();
    write_timings(&mut stdout, &rows)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    exec::configure_threads(cli.threads)?;
    let mode = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a, mode)?,
        Command::Ingest(a) => ingest(cli, a)?,
        Command::Cluster(a) => cluster(cli, a, mode)?,
        Command::Recommend(a) => recommend(cli, a, mode)?,
        Command::Evaluate(a) => evaluate_cmd(cli, a)?,
        Command::Experiment => return experiment(cli, mode),
        Command::Bench(a) => bench(cli, a, mode)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
