//! Pairwise dissimilarity matrices over user baskets.
//!
//! Euclidean, Cosine and MADD compare rows of the share matrix; Jaccard
//! compares rows of the binary matrix. MADD is built from a cached Euclidean
//! matrix, so the full cost is O(n²p + n³) rather than O(n³p).

mod io;
pub mod kernels;

use std::fmt;
use std::str::FromStr;

pub use io::{load_dissimilarity, read_dissimilarity, save_dissimilarity, write_dissimilarity};
pub use kernels::{cosine, euclidean, jaccard};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interaction::InteractionMatrices;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Euclidean,
    Cosine,
    Jaccard,
    Madd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Madd,
        MetricKind::Jaccard,
        MetricKind::Cosine,
        MetricKind::Euclidean,
    ];

    /// Tag byte used by the binary matrix format.
    pub fn tag(self) -> u8 {
        match self {
            MetricKind::Euclidean => 0,
            MetricKind::Cosine => 1,
            MetricKind::Jaccard => 2,
            MetricKind::Madd => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => MetricKind::Euclidean,
            1 => MetricKind::Cosine,
            2 => MetricKind::Jaccard,
            3 => MetricKind::Madd,
            _ => return None,
        })
    }

    /// Jaccard works on purchase incidence; the rest on revenue shares.
    pub fn uses_binary(self) -> bool {
        self == MetricKind::Jaccard
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "Euclidean",
            MetricKind::Cosine => "Cosine",
            MetricKind::Jaccard => "Jaccard",
            MetricKind::Madd => "MADD",
        }
    }

    /// `"binary"` or `"share"`: which matrix the metric reads.
    pub fn matrix_kind(self) -> &'static str {
        if self.uses_binary() {
            "binary"
        } else {
            "share"
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "cosine" => Ok(MetricKind::Cosine),
            "jaccard" => Ok(MetricKind::Jaccard),
            "madd" => Ok(MetricKind::Madd),
            other => Err(Error::Config(format!("unknown distance {other:?}"))),
        }
    }
}

/// Symmetric n×n dissimilarities with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    metric: MetricKind,
    values: Vec<f64>,
    degenerate_pairs: usize,
}

impl DissimilarityMatrix {
    /// Mirror per-row strict upper triangles (`upper[u][v - u - 1]`).
    fn from_upper(n: usize, metric: MetricKind, upper: Vec<Vec<f64>>) -> Self {
        let mut values = vec![0.0; n * n];
        for (u, row) in upper.into_iter().enumerate() {
            for (off, d) in row.into_iter().enumerate() {
                let v = u + 1 + off;
                values[u * n + v] = d;
                values[v * n + u] = d;
            }
        }
        DissimilarityMatrix {
            n,
            metric,
            values,
            degenerate_pairs: 0,
        }
    }

    /// Build from a dense square matrix, checking symmetry, zero diagonal
    /// and non-negativity.
    pub fn from_dense(metric: MetricKind, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (u, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { left: row.len(), right: n });
            }
            if row[u] != 0.0 {
                return Err(Error::InvalidParameter(format!("non-zero diagonal at {u}")));
            }
            for (v, &d) in row.iter().enumerate() {
                if d.is_nan() || d < 0.0 || d != rows[v][u] {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({u}, {v}) is negative, NaN or asymmetric"
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix {
            n,
            metric,
            values: rows.concat(),
            degenerate_pairs: 0,
        })
    }

    /// Dissimilarities of the 1-D points `xs` under |x − y|, labelled `metric`.
    pub fn from_points_1d(metric: MetricKind, xs: &[f64]) -> Self {
        let n = xs.len();
        let upper = (0..n)
            .map(|u| ((u + 1)..n).map(|v| (xs[u] - xs[v]).abs()).collect())
            .collect();
        Self::from_upper(n, metric, upper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.n + v]
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.n..(u + 1) * self.n]
    }

    /// Zero-norm Cosine pairs or empty-vs-empty Jaccard pairs encountered.
    pub fn degenerate_pairs(&self) -> usize {
        self.degenerate_pairs
    }

    /// Strict upper triangle, row-major.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |u| self.row(u)[u + 1..].iter().copied())
    }
}

/// MADD(u, v) = (1/(n−2)) Σ_{l≠u,v} |base[u][l] − base[v][l]|.
///
/// `base` must be a Euclidean matrix. The inner sum runs over ascending `l`.
pub fn madd_matrix(base: &DissimilarityMatrix, exec: Exec) -> Result<DissimilarityMatrix> {
    if base.metric != MetricKind::Euclidean {
        return Err(Error::InvalidParameter(format!(
            "MADD needs a Euclidean base matrix, got {}",
            base.metric
        )));
    }
    let n = base.n;
    if n < 3 {
        return Err(Error::MaddTooSmall(n));
    }
    let scale = (n - 2) as f64;
    let upper = exec.map(n, |u| {
        let ru = base.row(u);
        ((u + 1)..n)
            .map(|v| {
                let rv = base.row(v);
                let mut acc = 0.0;
                for l in (0..u).chain(u + 1..v).chain(v + 1..n) {
                    acc += (ru[l] - rv[l]).abs();
                }
                acc / scale
            })
            .collect()
    });
    Ok(DissimilarityMatrix::from_upper(n, MetricKind::Madd, upper))
}

/// Full pairwise matrix of `metric` over the users of `m`.
///
/// Each entry is computed exactly once and mirrored, so the result is
/// identical for every worker count.
pub fn pairwise(m: &InteractionMatrices, metric: MetricKind, exec: Exec) -> Result<DissimilarityMatrix> {
    let n = m.n_users();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "pairwise dissimilarities need at least 2 users, got {n}"
        )));
    }
    if metric == MetricKind::Madd && n < 3 {
        return Err(Error::MaddTooSmall(n));
    }
    let rows_with_events: Vec<(Vec<f64>, usize)> = match metric {
        MetricKind::Euclidean | MetricKind::Madd => exec.map(n, |u| {
            let a = m.share_row(u);
            let row = ((u + 1)..n)
                .map(|v| kernels::euclidean_unchecked(a, m.share_row(v)))
                .collect();
            (row, 0)
        }),
        MetricKind::Cosine => {
            let norms: Vec<f64> = exec.map(n, |u| m.share_row(u).norm());
            exec.map(n, |u| {
                let a = m.share_row(u);
                let mut events = 0;
                let row = ((u + 1)..n)
                    .map(|v| {
                        if norms[u] == 0.0 || norms[v] == 0.0 {
                            events += 1;
                        }
                        kernels::cosine_with_norms(a, m.share_row(v), norms[u], norms[v])
                    })
                    .collect();
                (row, events)
            })
        }
        MetricKind::Jaccard => exec.map(n, |u| {
            let a = m.binary_row(u);
            let mut events = 0;
            let row = ((u + 1)..n)
                .map(|v| {
                    let b = m.binary_row(v);
                    if a.indices.is_empty() && b.indices.is_empty() {
                        events += 1;
                    }
                    kernels::jaccard_unchecked(a, b)
                })
                .collect();
            (row, events)
        }),
    };
    let events: usize = rows_with_events.iter().map(|(_, e)| e).sum();
    let upper = rows_with_events.into_iter().map(|(r, _)| r).collect();
    let base_metric = if metric == MetricKind::Madd {
        MetricKind::Euclidean
    } else {
        metric
    };
    let mut dm = DissimilarityMatrix::from_upper(n, base_metric, upper);
    dm.degenerate_pairs = events;
    if events > 0 {
        log::warn!("{metric}: {events} degenerate pairs (empty or zero-norm rows)");
    }
    if metric == MetricKind::Madd {
        dm = madd_matrix(&dm, exec)?;
    }
    Ok(dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{build_matrices, TransactionRecord};

    fn matrices(rows: &[&[(usize, f64)]]) -> InteractionMatrices {
        let mut log = Vec::new();
        for (u, r) in rows.iter().enumerate() {
            for &(j, m) in r.iter() {
                log.push(TransactionRecord::new(format!("u{u:02}"), format!("i{j:02}"), m));
            }
        }
        build_matrices(&log).unwrap()
    }

    #[test]
    fn madd_hand_value_three_points() {
        let base = DissimilarityMatrix::from_points_1d(MetricKind::Euclidean, &[0.0, 0.1, 0.4]);
        let madd = madd_matrix(&base, Exec::Sequential).unwrap();
        assert!((madd.get(0, 1) - 0.1).abs() < 1e-12);
        assert_eq!(madd.get(0, 1), madd.get(1, 0));
        assert_eq!(madd.get(2, 2), 0.0);
    }

    #[test]
    fn madd_zero_for_identical_profiles() {
        let base = DissimilarityMatrix::from_points_1d(MetricKind::Euclidean, &[0.5, 0.5, 0.1, 0.9]);
        let madd = madd_matrix(&base, Exec::Sequential).unwrap();
        assert_eq!(madd.get(0, 1), 0.0);
    }

    #[test]
    fn madd_needs_three_and_euclidean_base() {
        let base = DissimilarityMatrix::from_points_1d(MetricKind::Euclidean, &[0.0, 1.0]);
        assert!(matches!(madd_matrix(&base, Exec::Sequential), Err(Error::MaddTooSmall(2))));
        let cos = DissimilarityMatrix::from_points_1d(MetricKind::Cosine, &[0.0, 1.0, 2.0]);
        assert!(madd_matrix(&cos, Exec::Sequential).is_err());
        let m = matrices(&[&[(0, 1.0)], &[(1, 1.0)]]);
        assert!(matches!(pairwise(&m, MetricKind::Madd, Exec::Sequential), Err(Error::MaddTooSmall(2))));
    }

    #[test]
    fn two_users_euclidean() {
        let m = matrices(&[&[(0, 3.0)], &[(1, 1.0)]]);
        let dm = pairwise(&m, MetricKind::Euclidean, Exec::Sequential).unwrap();
        assert_eq!(dm.n(), 2);
        assert!((dm.get(0, 1) - (0.75f64 * 0.75 + 0.25 * 0.25).sqrt()).abs() < 1e-15);
        assert_eq!(dm.get(0, 0), 0.0);
    }

    #[test]
    fn identical_users_give_zero_matrix() {
        let row: &[(usize, f64)] = &[(0, 2.0), (3, 1.0)];
        let m = matrices(&[row, row, row, row]);
        for metric in MetricKind::ALL {
            let dm = pairwise(&m, metric, Exec::Parallel).unwrap();
            assert!(dm.upper_triangle().all(|d| d.abs() < 1e-12), "{metric}");
            assert_eq!(dm.degenerate_pairs(), 0);
        }
    }

    #[test]
    fn dense_constructor_validates() {
        assert!(DissimilarityMatrix::from_dense(MetricKind::Euclidean, &[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::from_dense(MetricKind::Euclidean, &[vec![1.0]]).is_err());
        let ok = DissimilarityMatrix::from_dense(MetricKind::Euclidean, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(ok.get(1, 0), 1.0);
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in MetricKind::ALL {
            assert_eq!(m.name().parse::<MetricKind>().unwrap(), m);
            assert_eq!(MetricKind::from_tag(m.tag()), Some(m));
        }
        assert!("manhattan".parse::<MetricKind>().is_err());
    }
}
