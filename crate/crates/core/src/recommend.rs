//! Cluster-level product statistics and top-L recommendation lists.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::clustering::ClusteringModel;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interaction::InteractionMatrices;

/// Scoring rule for candidate items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// f_{j,k} / |C_k|
    Popularity,
    /// cluster revenue share s^k_j
    Revenue,
    /// popularity × cluster revenue share
    ExpProfit,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Popularity, Method::Revenue, Method::ExpProfit];

    pub fn name(self) -> &'static str {
        match self {
            Method::Popularity => "Popularity",
            Method::Revenue => "Revenue",
            Method::ExpProfit => "ExpProfit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "popularity" | "pop" => Ok(Method::Popularity),
            "revenue" | "rev" => Ok(Method::Revenue),
            "expprofit" | "exppro" => Ok(Method::ExpProfit),
            other => Err(Error::Config(format!("unknown recommendation method {other:?}"))),
        }
    }
}

/// Purchase statistics of one cluster over its item union J_k.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterProductStats {
    pub cluster: usize,
    pub size: usize,
    /// J_k, ascending.
    pub items: Vec<usize>,
    /// f_{j,k}, parallel to `items`.
    pub freq: Vec<usize>,
    /// Σ_{u∈C_k} s_uj, parallel to `items`.
    pub cluster_share: Vec<f64>,
}

impl ClusterProductStats {
    fn position(&self, j: usize) -> Result<usize> {
        self.items.binary_search(&j).map_err(|_| Error::ItemNotInCluster(j))
    }

    pub fn contains(&self, j: usize) -> bool {
        self.items.binary_search(&j).is_ok()
    }

    fn score_at(&self, pos: usize, method: Method) -> f64 {
        let pop = self.freq[pos] as f64 / self.size as f64;
        match method {
            Method::Popularity => pop,
            Method::Revenue => self.cluster_share[pos],
            Method::ExpProfit => pop * self.cluster_share[pos],
        }
    }
}

/// Statistics for every non-empty cluster, in label order.
pub fn cluster_stats(train: &InteractionMatrices, model: &ClusteringModel) -> Result<Vec<ClusterProductStats>> {
    if model.assignment.len() != train.n_users() {
        return Err(Error::DimensionMismatch {
            left: model.assignment.len(),
            right: train.n_users(),
        });
    }
    // (members, item -> (frequency, summed share)) per label
    type Tally = (usize, BTreeMap<usize, (usize, f64)>);
    let mut per_cluster: Vec<Tally> = (0..model.k).map(|_| (0, BTreeMap::new())).collect();
    for (u, &c) in model.assignment.iter().enumerate() {
        let (size, acc) = per_cluster
            .get_mut(c)
            .ok_or_else(|| Error::InvalidParameter(format!("label {c} >= k = {}", model.k)))?;
        *size += 1;
        let row = train.share_row(u);
        for (&j, &s) in row.indices.iter().zip(row.values) {
            let e = acc.entry(j).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += s;
        }
    }
    Ok(per_cluster
        .into_iter()
        .enumerate()
        .filter(|(_, (size, _))| *size > 0)
        .map(|(cluster, (size, acc))| {
            let mut stats = ClusterProductStats {
                cluster,
                size,
                items: Vec::with_capacity(acc.len()),
                freq: Vec::with_capacity(acc.len()),
                cluster_share: Vec::with_capacity(acc.len()),
            };
            for (j, (f, s)) in acc {
                stats.items.push(j);
                stats.freq.push(f);
                stats.cluster_share.push(s);
            }
            stats
        })
        .collect())
}

/// V(j, C_k) under `method`.
pub fn score(j: usize, stats: &ClusterProductStats, method: Method) -> Result<f64> {
    Ok(stats.score_at(stats.position(j)?, method))
}

/// Ordered top-L list for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct RecommendationList {
    pub user: usize,
    pub method: Method,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
    /// The requested L.
    pub l: usize,
    /// Fewer than L candidates were available.
    pub truncated: bool,
}

/// The L highest-scoring items of J_k outside `train_basket`.
///
/// Scores are sorted descending with ascending item index on ties. Because
/// the objective is a sum of per-item scores, this greedy pick is the exact
/// subset optimum.
pub fn top_l(
    user: usize,
    stats: &ClusterProductStats,
    method: Method,
    l: usize,
    train_basket: &[usize],
) -> Result<RecommendationList> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let mut candidates: Vec<(usize, f64)> = stats
        .items
        .iter()
        .enumerate()
        .filter(|(_, j)| train_basket.binary_search(j).is_err())
        .map(|(pos, &j)| (j, stats.score_at(pos, method)))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let truncated = candidates.len() < l;
    candidates.truncate(l);
    let (items, scores) = candidates.into_iter().unzip();
    Ok(RecommendationList {
        user,
        method,
        items,
        scores,
        l,
        truncated,
    })
}

/// Top-L lists for every user from their own cluster's statistics.
pub fn recommend_all(
    train: &InteractionMatrices,
    model: &ClusteringModel,
    method: Method,
    l: usize,
    exec: Exec,
) -> Result<Vec<RecommendationList>> {
    let stats = cluster_stats(train, model)?;
    let mut by_label = vec![None; model.k];
    for (i, s) in stats.iter().enumerate() {
        by_label[s.cluster] = Some(i);
    }
    exec.try_map(train.n_users(), |u| {
        let idx = by_label[model.assignment[u]].expect("user's cluster is non-empty");
        top_l(u, &stats[idx], method, l, train.basket(u))
    })
}
