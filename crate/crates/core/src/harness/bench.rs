//! Wall-clock scaling of the dissimilarity builders.

use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interaction::InteractionMatrices;
use crate::rng::{self, Domain};
use crate::similarity::{madd_matrix, pairwise, MetricKind};

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub metric: MetricKind,
    pub n: usize,
    pub p: usize,
    pub median_secs: f64,
}

/// `n × p` matrix where each row buys `⌈density · p⌉` random items at
/// uniform positive spend.
pub fn random_share_matrix(n: usize, p: usize, density: f64, seed: u64) -> Result<InteractionMatrices> {
    if n == 0 || p == 0 {
        return Err(Error::EmptyInput("benchmark matrix"));
    }
    let per_row = ((density * p as f64).ceil() as usize).clamp(1, p);
    let rows = (0..n)
        .map(|u| {
            let mut r = rng::stream(seed, Domain::Bench, u as u64);
            let mut items = index::sample(&mut r, p, per_row).into_vec();
            items.sort_unstable();
            items.into_iter().map(|j| (j, 1.0 - r.gen::<f64>())).collect()
        })
        .collect();
    InteractionMatrices::from_rows(
        (0..n).map(|u| format!("u{u:08}")).collect(),
        (0..p).map(|j| format!("i{j:08}")).collect(),
        rows,
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Median time to build the `metric` matrix at each `(n, p)`.
///
/// For MADD only the step from a ready Euclidean matrix is timed, which is
/// the part whose cost grows with n cubed.
pub fn bench_similarity(
    sizes: &[(usize, usize)],
    metric: MetricKind,
    density: f64,
    repeats: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<TimingRow>> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("benchmark sizes"));
    }
    let repeats = repeats.max(1);
    let mut out = Vec::with_capacity(sizes.len());
    for &(n, p) in sizes {
        let m = random_share_matrix(n, p, density, seed)?;
        let base = if metric == MetricKind::Madd {
            Some(pairwise(&m, MetricKind::Euclidean, exec)?)
        } else {
            None
        };
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t = Instant::now();
            let dm = match &base {
                Some(b) => madd_matrix(b, exec)?,
                None => pairwise(&m, metric, exec)?,
            };
            times.push(t.elapsed().as_secs_f64());
            std::hint::black_box(dm);
        }
        let row = TimingRow { metric, n, p, median_secs: median(times) };
        log::info!("{} n={} p={}: {:.6}s", metric, n, p, row.median_secs);
        out.push(row);
    }
    Ok(out)
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `timings.csv`: one line per size, then one `slope` line per metric.
pub fn write_timings<W: Write>(mut w: W, rows: &[TimingRow]) -> Result<()> {
    writeln!(w, "metric,n,p,median_secs")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.metric, r.n, r.p, r.median_secs)?;
    }
    let mut metrics: Vec<MetricKind> = rows.iter().map(|r| r.metric).collect();
    metrics.dedup();
    for m in metrics {
        let pts: Vec<(usize, f64)> = rows.iter().filter(|r| r.metric == m).map(|r| (r.n, r.median_secs)).collect();
        if let Some(s) = loglog_slope(&pts) {
            writeln!(w, "{m},slope_n,,{s}")?;
        }
    }
    Ok(())
}
