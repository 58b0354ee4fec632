//! PAM k-medoids over a precomputed dissimilarity matrix, silhouette
//! scoring and silhouette-based choice of k.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{self, Domain};
use crate::similarity::DissimilarityMatrix;

/// Restarts per k used by [`select_k`] unless configured otherwise.
pub const DEFAULT_RESTARTS: usize = 5;

/// A swap must lower the cost by more than this fraction of it to be taken.
const REL_IMPROVEMENT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringModel {
    pub k: usize,
    /// Medoid user index per cluster label.
    pub medoids: Vec<usize>,
    /// Cluster label per user.
    pub assignment: Vec<usize>,
    /// Σ_u d(u, medoid of u).
    pub total_cost: f64,
    pub mean_silhouette: f64,
}

impl ClusteringModel {
    /// Member user indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &c) in self.assignment.iter().enumerate() {
            out[c].push(u);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }

    /// Check the nearest-medoid assignment and the cost against `dm`.
    pub fn is_consistent_with(&self, dm: &DissimilarityMatrix) -> bool {
        let (assignment, cost) = assign_to_medoids(dm, &self.medoids);
        assignment == self.assignment
            && (cost - self.total_cost).abs() <= 1e-9 * cost.abs().max(1.0)
    }
}

/// Inclusive range of candidate cluster counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub fn new(min: usize, max: usize) -> Self {
        KRange { min, max }
    }

    /// Clip the upper end to `n − 1`.
    pub fn clamp_to(self, n: usize) -> Self {
        KRange {
            min: self.min,
            max: self.max.min(n.saturating_sub(1)),
        }
    }
}

impl Default for KRange {
    fn default() -> Self {
        KRange { min: 2, max: 8 }
    }
}

/// Index of the smallest distance, lowest index on ties.
pub fn assign_point(dist_to_medoids: &[f64]) -> usize {
    let mut best = 0;
    for (c, &d) in dist_to_medoids.iter().enumerate().skip(1) {
        if d < dist_to_medoids[best] {
            best = c;
        }
    }
    best
}

/// Nearest-medoid labels and total cost. A medoid always labels itself.
pub fn assign_to_medoids(dm: &DissimilarityMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let labels = (0..dm.n())
        .map(|u| {
            let c = medoids.iter().position(|&m| m == u).unwrap_or_else(|| {
                let row = dm.row(u);
                let d: Vec<f64> = medoids.iter().map(|&m| row[m]).collect();
                assign_point(&d)
            });
            cost += dm.get(u, medoids[c]);
            c
        })
        .collect();
    (labels, cost)
}

#[derive(Clone, Copy, Debug)]
struct Nearest {
    slot: usize,
    dn: f64,
    ds: f64,
}

fn nearest_table(dm: &DissimilarityMatrix, medoids: &[usize]) -> (Vec<Nearest>, f64) {
    let (labels, cost) = assign_to_medoids(dm, medoids);
    let table = labels
        .iter()
        .enumerate()
        .map(|(o, &slot)| {
            let row = dm.row(o);
            let ds = medoids
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != slot)
                .map(|(_, &m)| row[m])
                .fold(f64::INFINITY, f64::min);
            Nearest {
                slot,
                dn: row[medoids[slot]],
                ds,
            }
        })
        .collect();
    (table, cost)
}

fn pick_tie(rng: &mut ChaCha8Rng, count: usize) -> usize {
    if count > 1 {
        rng.gen_range(0..count)
    } else {
        0
    }
}

/// Greedy BUILD: the most central point, then repeatedly the point with the
/// largest total cost reduction.
fn build(dm: &DissimilarityMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = dm.n();
    let totals: Vec<f64> = (0..n).map(|i| dm.row(i).iter().sum()).collect();
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<usize> = (0..n).filter(|&i| totals[i] == best).collect();
    let mut medoids = vec![ties[pick_tie(rng, ties.len())]];
    let mut nearest: Vec<f64> = dm.row(medoids[0]).to_vec();
    let mut is_medoid = vec![false; n];
    is_medoid[medoids[0]] = true;
    while medoids.len() < k {
        let gains: Vec<(usize, f64)> = (0..n)
            .filter(|&i| !is_medoid[i])
            .map(|i| {
                let row = dm.row(i);
                let g = (0..n).map(|j| (nearest[j] - row[j]).max(0.0)).sum();
                (i, g)
            })
            .collect();
        let top = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = gains.iter().filter(|g| g.1 == top).map(|g| g.0).collect();
        let chosen = ties[pick_tie(rng, ties.len())];
        is_medoid[chosen] = true;
        medoids.push(chosen);
        for (j, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dm.get(j, chosen));
        }
    }
    medoids
}

/// Best-improvement SWAP from `medoids`; returns the cost after every
/// accepted swap (starting with the initial cost).
fn swap(dm: &DissimilarityMatrix, medoids: &mut [usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = dm.n();
    let k = medoids.len();
    let (mut table, mut cost) = nearest_table(dm, medoids);
    let mut trace = vec![cost];
    loop {
        let mut is_medoid = vec![false; n];
        for &m in medoids.iter() {
            is_medoid[m] = true;
        }
        let mut best = f64::INFINITY;
        let mut ties: Vec<(usize, usize)> = Vec::new();
        for h in (0..n).filter(|&h| !is_medoid[h]) {
            let row_h = dm.row(h);
            for slot in 0..k {
                let mut delta = 0.0;
                for (o, near) in table.iter().enumerate() {
                    let doh = row_h[o];
                    if near.slot == slot {
                        delta += doh.min(near.ds) - near.dn;
                    } else if doh < near.dn {
                        delta += doh - near.dn;
                    }
                }
                if delta < best {
                    best = delta;
                    ties.clear();
                    ties.push((slot, h));
                } else if delta == best {
                    ties.push((slot, h));
                }
            }
        }
        if ties.is_empty() || best >= -REL_IMPROVEMENT * cost {
            break;
        }
        let (slot, h) = ties[pick_tie(rng, ties.len())];
        let previous = medoids[slot];
        medoids[slot] = h;
        let (new_table, new_cost) = nearest_table(dm, medoids);
        if new_cost >= cost {
            medoids[slot] = previous;
            break;
        }
        table = new_table;
        cost = new_cost;
        trace.push(cost);
    }
    trace
}

fn check_k(dm: &DissimilarityMatrix, k: usize) -> Result<()> {
    if k < 2 || k >= dm.n() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must satisfy 2 <= k < n = {}",
            dm.n()
        )));
    }
    Ok(())
}

/// One PAM run. Restart 0 seeds with BUILD, later restarts with a uniformly
/// random medoid set; the stream for `(seed, restart)` also breaks ties.
fn pam_run(dm: &DissimilarityMatrix, k: usize, seed: u64, restart: usize) -> (Vec<usize>, Vec<f64>) {
    let mut rng = rng::stream(seed, Domain::Pam, restart as u64);
    let mut medoids = if restart == 0 {
        build(dm, k, &mut rng)
    } else {
        let mut m = index::sample(&mut rng, dm.n(), k).into_vec();
        m.sort_unstable();
        m
    };
    let trace = swap(dm, &mut medoids, &mut rng);
    (medoids, trace)
}

fn finish(dm: &DissimilarityMatrix, medoids: Vec<usize>) -> ClusteringModel {
    let (assignment, total_cost) = assign_to_medoids(dm, &medoids);
    let k = medoids.len();
    let (_, mean_silhouette) = silhouette_of(dm, &assignment, k);
    ClusteringModel {
        k,
        medoids,
        assignment,
        total_cost,
        mean_silhouette,
    }
}

/// PAM (BUILD then best-improvement SWAP) with `seed` breaking exact ties.
pub fn pam(dm: &DissimilarityMatrix, k: usize, seed: u64) -> Result<ClusteringModel> {
    pam_traced(dm, k, seed).map(|(m, _)| m)
}

/// [`pam`] plus the total cost after every accepted swap.
pub fn pam_traced(dm: &DissimilarityMatrix, k: usize, seed: u64) -> Result<(ClusteringModel, Vec<f64>)> {
    check_k(dm, k)?;
    let (medoids, trace) = pam_run(dm, k, seed, 0);
    Ok((finish(dm, medoids), trace))
}

/// Lowest-cost result of `restarts` PAM runs (ties keep the earlier run).
pub fn pam_best_of(
    dm: &DissimilarityMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
    exec: Exec,
) -> Result<ClusteringModel> {
    check_k(dm, k)?;
    let runs = exec.map(restarts.max(1), |r| pam_run(dm, k, seed, r));
    Ok(finish(dm, best_run(runs)))
}

fn best_run(runs: Vec<(Vec<usize>, Vec<f64>)>) -> Vec<usize> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for (medoids, trace) in runs {
        let cost = *trace.last().expect("trace holds the initial cost");
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((medoids, cost));
        }
    }
    best.expect("at least one run").0
}

/// Per-user silhouette and its mean for `assignment` with `k` labels.
///
/// Members of singleton clusters score 0, as do users whose A and B are both 0.
pub fn silhouette_of(dm: &DissimilarityMatrix, assignment: &[usize], k: usize) -> (Vec<f64>, f64) {
    let n = dm.n();
    let mut counts = vec![0usize; k];
    for &c in assignment {
        counts[c] += 1;
    }
    let per_user: Vec<f64> = (0..n)
        .map(|u| {
            let own = assignment[u];
            if counts[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (v, &d) in dm.row(u).iter().enumerate() {
                if v != u {
                    sums[assignment[v]] += d;
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let scale = a.max(b);
            if scale == 0.0 {
                0.0
            } else {
                (b - a) / scale
            }
        })
        .collect();
    let mean = per_user.iter().sum::<f64>() / n as f64;
    (per_user, mean)
}

/// Silhouette of a fitted model.
pub fn silhouette(dm: &DissimilarityMatrix, model: &ClusteringModel) -> Result<(Vec<f64>, f64)> {
    if model.k < 2 {
        return Err(Error::InvalidParameter("silhouette needs k >= 2".into()));
    }
    if model.assignment.len() != dm.n() {
        return Err(Error::DimensionMismatch {
            left: model.assignment.len(),
            right: dm.n(),
        });
    }
    if let Some(&bad) = model.assignment.iter().find(|&&c| c >= model.k) {
        return Err(Error::InvalidParameter(format!("label {bad} >= k = {}", model.k)));
    }
    Ok(silhouette_of(dm, &model.assignment, model.k))
}

/// Run PAM for every k in `range` and keep the model with the highest mean
/// silhouette (ties go to the smaller k). Returns that model and the
/// `(k, mean silhouette)` profile.
pub fn select_k(
    dm: &DissimilarityMatrix,
    range: KRange,
    restarts: usize,
    seed: u64,
    exec: Exec,
) -> Result<(ClusteringModel, Vec<(usize, f64)>)> {
    if range.min > range.max {
        return Err(Error::InvalidParameter(format!(
            "empty k range [{}, {}]",
            range.min, range.max
        )));
    }
    check_k(dm, range.min)?;
    check_k(dm, range.max)?;
    let restarts = restarts.max(1);
    let ks: Vec<usize> = (range.min..=range.max).collect();
    let tasks: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..restarts).map(move |r| (k, r)))
        .collect();
    let runs = exec.map(tasks.len(), |t| {
        let (k, r) = tasks[t];
        pam_run(dm, k, rng::mix(seed, k as u64), r)
    });
    let mut runs = runs.into_iter();
    let models: Vec<ClusteringModel> = ks
        .iter()
        .map(|_| {
            let chunk: Vec<_> = runs.by_ref().take(restarts).collect();
            finish(dm, best_run(chunk))
        })
        .collect();
    let profile = models.iter().map(|m| (m.k, m.mean_silhouette)).collect();
    let mut best = 0;
    for (i, m) in models.iter().enumerate() {
        if m.mean_silhouette > models[best].mean_silhouette {
            best = i;
        }
    }
    Ok((models.into_iter().nth(best).expect("non-empty range"), profile))
}

/// Fraction of users whose cluster's majority true label matches their own.
pub fn purity(assignment: &[usize], truth: &[usize]) -> f64 {
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let t = truth.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; t]; k];
    for (&c, &l) in assignment.iter().zip(truth) {
        counts[c][l] += 1;
    }
    let hit: usize = counts.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    hit as f64 / assignment.len().max(1) as f64
}

/// Write `k=`, `medoids=`, one `assignment=user:label` per user,
/// `mean_silhouette=` and `total_cost=` lines.
pub fn write_model<W: Write>(mut w: W, model: &ClusteringModel, users: &[String]) -> Result<()> {
    writeln!(w, "k={}", model.k)?;
    let medoids: Vec<&str> = model.medoids.iter().map(|&m| users[m].as_str()).collect();
    writeln!(w, "medoids={}", medoids.join(","))?;
    for (u, &c) in model.assignment.iter().enumerate() {
        writeln!(w, "assignment={}:{}", users[u], c)?;
    }
    writeln!(w, "mean_silhouette={}", model.mean_silhouette)?;
    writeln!(w, "total_cost={}", model.total_cost)?;
    Ok(())
}

/// Parse a model written by [`write_model`] against the user index `users`.
///
/// `total_cost` is NaN when the file does not carry it.
pub fn read_model<R: BufRead>(r: R, users: &[String]) -> Result<ClusteringModel> {
    let index = |id: &str| {
        users
            .binary_search_by(|u| u.as_str().cmp(id))
            .map_err(|_| Error::Format(format!("model names unknown user {id:?}")))
    };
    let bad = |line: &str| Error::Format(format!("malformed model line {line:?}"));
    let mut k = None;
    let mut medoids = None;
    let mut assignment = vec![None; users.len()];
    let mut mean_silhouette = f64::NAN;
    let mut total_cost = f64::NAN;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad(line))?;
        match key.trim() {
            "k" => k = Some(value.trim().parse::<usize>().map_err(|_| bad(line))?),
            "medoids" => {
                medoids = Some(
                    value
                        .split(',')
                        .map(|id| index(id.trim()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "assignment" => {
                let (id, label) = value.rsplit_once(':').ok_or_else(|| bad(line))?;
                let label = label.trim().parse::<usize>().map_err(|_| bad(line))?;
                assignment[index(id.trim())?] = Some(label);
            }
            "mean_silhouette" => mean_silhouette = value.trim().parse().map_err(|_| bad(line))?,
            "total_cost" => total_cost = value.trim().parse().map_err(|_| bad(line))?,
            _ => return Err(bad(line)),
        }
    }
    let k = k.ok_or_else(|| Error::Format("model lacks k=".into()))?;
    let medoids = medoids.ok_or_else(|| Error::Format("model lacks medoids=".into()))?;
    if medoids.len() != k {
        return Err(Error::Format(format!("{} medoids for k = {k}", medoids.len())));
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(u, a)| match a {
            Some(c) if c < k => Ok(c),
            Some(c) => Err(Error::Format(format!("label {c} >= k for user {}", users[u]))),
            None => Err(Error::Format(format!("no assignment for user {}", users[u]))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusteringModel {
        k,
        medoids,
        assignment,
        total_cost,
        mean_silhouette,
    })
}
