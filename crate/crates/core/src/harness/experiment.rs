//! The repeated simulate/ingest → cluster → recommend → evaluate loop.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::{ExperimentConfig, Source};
use crate::clustering::{purity, select_k};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interaction::{build_matrices, read_transactions, split_by_masking, InteractionMatrices, SplitMatrices};
use crate::metrics::{evaluate, EvalReport};
use crate::recommend::{recommend_all, Method};
use crate::similarity::{pairwise, MetricKind};
use crate::synthgen::{generate, ScenarioSpec};

/// Outcome of clustering one run's training matrix under one distance.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringRecord {
    pub distance: MetricKind,
    pub k: usize,
    pub mean_silhouette: f64,
    /// Agreement with the generating segments, when they are known.
    pub purity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub method: Method,
    pub distance: MetricKind,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub clustering: Vec<ClusteringRecord>,
    pub metrics: Vec<MetricRow>,
}

/// Mean and sample standard deviation of one (method, distance, metric) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub method: Method,
    pub distance: MetricKind,
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringSummary {
    pub distance: MetricKind,
    /// Selected k → number of runs.
    pub k_counts: BTreeMap<usize, usize>,
    pub mean_silhouette: f64,
    pub runs: usize,
}

impl ClusteringSummary {
    /// Fraction of runs that selected `k`.
    pub fn share_of(&self, k: usize) -> f64 {
        self.k_counts.get(&k).copied().unwrap_or(0) as f64 / self.runs as f64
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResultTable {
    pub label: String,
    pub rows: Vec<TableRow>,
    pub clustering: Vec<ClusteringSummary>,
}

pub const METRIC_NAMES: [&str; 3] = ["precision", "ndcg", "ndcv"];

fn metric_of(r: &EvalReport, name: &str) -> f64 {
    match name {
        "precision" => r.precision,
        "ndcg" => r.ndcg,
        _ => r.ndcv,
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ResultTable {
    fn aggregate(cfg: &ExperimentConfig, label: String, records: &[RunRecord]) -> Self {
        let mut rows = Vec::new();
        let mut clustering = Vec::new();
        if records.is_empty() {
            return ResultTable { label, rows, clustering };
        }
        for &method in &cfg.methods {
            for &distance in &cfg.distances {
                for metric in METRIC_NAMES {
                    let xs: Vec<f64> = records
                        .iter()
                        .flat_map(|r| &r.metrics)
                        .filter(|m| m.method == method && m.distance == distance)
                        .map(|m| metric_of(&m.report, metric))
                        .collect();
                    let (mean, std) = mean_std(&xs);
                    rows.push(TableRow { method, distance, metric, mean, std, runs: xs.len() });
                }
            }
        }
        for &distance in &cfg.distances {
            let recs: Vec<&ClusteringRecord> = records
                .iter()
                .flat_map(|r| &r.clustering)
                .filter(|c| c.distance == distance)
                .collect();
            let mut k_counts = BTreeMap::new();
            for c in &recs {
                *k_counts.entry(c.k).or_insert(0) += 1;
            }
            let sil: Vec<f64> = recs.iter().map(|c| c.mean_silhouette).collect();
            clustering.push(ClusteringSummary {
                distance,
                k_counts,
                mean_silhouette: mean_std(&sil).0,
                runs: recs.len(),
            });
        }
        ResultTable { label, rows, clustering }
    }

    pub fn get(&self, method: Method, distance: MetricKind, metric: &str) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.distance == distance && r.metric == metric)
    }

    pub fn clustering_for(&self, distance: MetricKind) -> Option<&ClusteringSummary> {
        self.clustering.iter().find(|c| c.distance == distance)
    }

    pub fn write_results<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,method,distance,metric,mean,std,runs")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.label, r.method, r.distance, r.metric, r.mean, r.std, r.runs
            )?;
        }
        Ok(())
    }

    pub fn write_clustering_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,distance,runs,selected_k,mean_silhouette")?;
        for c in &self.clustering {
            let hist: Vec<String> = c.k_counts.iter().map(|(k, n)| format!("{k}:{n}")).collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                self.label,
                c.distance,
                c.runs,
                hist.join(";"),
                c.mean_silhouette
            )?;
        }
        Ok(())
    }
}

/// Everything one experiment produced.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    /// Completed runs, by run index.
    pub records: Vec<RunRecord>,
    /// Runs that aborted, by run index.
    pub failures: Vec<Error>,
}

impl ExperimentOutput {
    pub fn write_details<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "scenario,method,metric_kind,distance,precision,ndcg,ndcv,users_evaluated,users_skipped,run_seed"
        )?;
        for rec in &self.records {
            for m in &rec.metrics {
                let r = &m.report;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    self.table.label,
                    m.method,
                    m.distance.matrix_kind(),
                    m.distance,
                    r.precision,
                    r.ndcg,
                    r.ndcv,
                    r.users_evaluated,
                    r.users_skipped,
                    rec.seed
                )?;
            }
        }
        Ok(())
    }

    pub fn write_clustering<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "run,scenario,distance,k,mean_silhouette,purity,run_seed")?;
        for rec in &self.records {
            for c in &rec.clustering {
                let purity = c.purity.map(|p| p.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    rec.run, self.table.label, c.distance, c.k, c.mean_silhouette, purity, rec.seed
                )?;
            }
        }
        Ok(())
    }

    /// Write `results.csv`, `runs_detail.csv`, `clustering.csv` and
    /// `clustering_summary.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        let mut w = open("results.csv")?;
        self.table.write_results(&mut w)?;
        w.flush()?;
        let mut w = open("runs_detail.csv")?;
        self.write_details(&mut w)?;
        w.flush()?;
        let mut w = open("clustering.csv")?;
        self.write_clustering(&mut w)?;
        w.flush()?;
        let mut w = open("clustering_summary.csv")?;
        self.table.write_clustering_summary(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

struct RunData {
    split: SplitMatrices,
    labels: Option<Vec<usize>>,
}

fn run_once(
    cfg: &ExperimentConfig,
    retail: Option<&InteractionMatrices>,
    run: usize,
    seed: u64,
    exec: Exec,
) -> Result<RunRecord> {
    let stage = |distance: &str, stage: &'static str| {
        let distance = distance.to_string();
        move |e: Error| Error::Stage { run, distance, stage, source: Box::new(e) }
    };
    let data = match (&cfg.source, retail) {
        (Source::Synthetic(spec), _) => {
            let spec = ScenarioSpec { seed, ..spec.clone() };
            let d = generate(&spec, exec).map_err(stage("-", "generate"))?;
            RunData { split: d.split, labels: Some(d.labels) }
        }
        (Source::Retail { mask_fraction, .. }, Some(full)) => RunData {
            split: split_by_masking(full, *mask_fraction, seed).map_err(stage("-", "split"))?,
            labels: None,
        },
        (Source::Retail { .. }, None) => unreachable!("retail matrix is loaded before the runs"),
    };
    let train = &data.split.train;
    let values = train.item_values();

    let mut clustering = Vec::with_capacity(cfg.distances.len());
    let mut metrics = Vec::with_capacity(cfg.distances.len() * cfg.methods.len());
    for &distance in &cfg.distances {
        let name = distance.name();
        let dm = pairwise(train, distance, exec).map_err(stage(name, "similarity"))?;
        let range = cfg.k_range.clamp_to(dm.n());
        let (model, _) =
            select_k(&dm, range, cfg.restarts, seed, exec).map_err(stage(name, "clustering"))?;
        clustering.push(ClusteringRecord {
            distance,
            k: model.k,
            mean_silhouette: model.mean_silhouette,
            purity: data.labels.as_ref().map(|t| purity(&model.assignment, t)),
        });
        for &method in &cfg.methods {
            let recs = recommend_all(train, &model, method, cfg.l, exec)
                .map_err(stage(name, "recommend"))?;
            let report = evaluate(&recs, &data.split.test_baskets, &values, cfg.ndcv_ideal)
                .map_err(stage(name, "evaluate"))?;
            metrics.push(MetricRow { method, distance, report });
        }
    }
    Ok(RunRecord { run, seed, clustering, metrics })
}

/// Run `cfg.runs` independent repetitions with seeds `base_seed + r`.
///
/// A failing run is reported in `failures` and left out of the table; the
/// call itself fails only if the configuration is invalid, the shared input
/// cannot be loaded, or no run completes.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Exec) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let retail = match &cfg.source {
        Source::Retail { path, filter, .. } => {
            let log = read_transactions(path, filter)?;
            let full = build_matrices(&log)?;
            log::info!(
                "ingested {} customers, {} products, sparsity {:.4}",
                full.n_users(),
                full.n_items(),
                full.sparsity()
            );
            Some(full)
        }
        Source::Synthetic(_) => None,
    };
    let outcomes = exec.map(cfg.runs, |r| {
        let seed = cfg.base_seed.wrapping_add(r as u64);
        let out = run_once(cfg, retail.as_ref(), r, seed, exec);
        log::debug!("run {r} finished");
        out
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("{e}");
                failures.push(e);
            }
        }
    }
    if records.is_empty() {
        return Err(failures.into_iter().next().expect("runs >= 1"));
    }
    let table = ResultTable::aggregate(cfg, cfg.source.label(), &records);
    Ok(ExperimentOutput { table, records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::Scenario;

    fn tiny() -> ExperimentConfig {
        let spec = ScenarioSpec { n_per_type: 12, n_items: 200, ..ScenarioSpec::new(Scenario::I) };
        ExperimentConfig {
            runs: 2,
            k_range: crate::clustering::KRange::new(2, 4),
            restarts: 2,
            base_seed: 5,
            ..ExperimentConfig::synthetic(spec)
        }
    }

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_shape_and_ranges() {
        let cfg = tiny();
        let out = run_experiment(&cfg, Exec::Sequential).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[1].seed, 6);
        assert_eq!(out.table.rows.len(), 3 * 4 * 3);
        for r in &out.table.rows {
            assert!((0.0..=1.0).contains(&r.mean), "{r:?}");
            assert!(r.std >= 0.0);
            assert_eq!(r.runs, 2);
        }
        for c in &out.table.clustering {
            assert_eq!(c.k_counts.values().sum::<usize>(), 2);
        }
    }

    #[test]
    fn rows_recomputable_from_details() {
        let out = run_experiment(&tiny(), Exec::Sequential).unwrap();
        let row = out.table.get(Method::Revenue, MetricKind::Madd, "ndcv").unwrap();
        let xs: Vec<f64> = out
            .records
            .iter()
            .flat_map(|r| &r.metrics)
            .filter(|m| m.method == Method::Revenue && m.distance == MetricKind::Madd)
            .map(|m| m.report.ndcv)
            .collect();
        assert_eq!(mean_std(&xs), (row.mean, row.std));
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let cfg = tiny();
        let a = run_experiment(&cfg, Exec::Sequential).unwrap();
        let b = run_experiment(&cfg, Exec::Parallel).unwrap();
        assert_eq!(a.table, b.table);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.table.write_results(&mut x).unwrap();
        b.table.write_results(&mut y).unwrap();
        assert_eq!(x, y);
    }
}
