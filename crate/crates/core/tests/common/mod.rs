//! Independent dense reference implementations used by the oracle tests.
#![allow(dead_code)]

use basketseg::rng::{stream, Domain};
use basketseg::InteractionMatrices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(case: u64) -> ChaCha8Rng {
    stream(0xC0FFEE, Domain::Test, case)
}

/// Random matrix with roughly `density` of cells filled; every user buys
/// at least one item.
pub fn random_matrix(r: &mut ChaCha8Rng, n: usize, p: usize, density: f64) -> InteractionMatrices {
    let rows = (0..n)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..p {
                if r.gen::<f64>() < density {
                    row.push((j, r.gen_range(0.01..100.0)));
                }
            }
            if row.is_empty() {
                row.push((r.gen_range(0..p), r.gen_range(0.01..100.0)));
            }
            row
        })
        .collect();
    InteractionMatrices::from_rows(
        (0..n).map(|u| format!("u{u:03}")).collect(),
        (0..p).map(|j| format!("i{j:03}")).collect(),
        rows,
    )
    .unwrap()
}

pub fn dense_shares(m: &InteractionMatrices) -> Vec<Vec<f64>> {
    (0..m.n_users())
        .map(|u| {
            let mut d = vec![0.0; m.n_items()];
            let row = m.share_row(u);
            for (&j, &s) in row.indices.iter().zip(row.values) {
                d[j] = s;
            }
            d
        })
        .collect()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cosine_dist(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        (1.0 - dot / (na * nb)).clamp(0.0, 1.0)
    }
}

pub fn jaccard_dist(a: &[f64], b: &[f64]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x > 0.0 && **y > 0.0).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x > 0.0 || **y > 0.0).count();
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Mean over third points of the absolute difference of distances to them.
pub fn madd_direct(x: &[Vec<f64>], u: usize, v: usize) -> f64 {
    if u == v {
        return 0.0;
    }
    let n = x.len();
    let mut acc = 0.0;
    for l in 0..n {
        if l != u && l != v {
            acc += (euclid(&x[u], &x[l]) - euclid(&x[v], &x[l])).abs();
        }
    }
    acc / (n - 2) as f64
}

/// Minimum k-medoid cost over every medoid subset.
pub fn exhaustive_kmedoid_cost(d: &[Vec<f64>], k: usize) -> f64 {
    let n = d.len();
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let cost: f64 = (0..n)
            .map(|i| subset.iter().map(|&m| d[i][m]).fold(f64::INFINITY, f64::min))
            .sum();
        best = best.min(cost);
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && subset[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        subset[i - 1] += 1;
        for t in i..k {
            subset[t] = subset[t - 1] + 1;
        }
    }
}

/// Best total score over all `l`-subsets (or all candidates if fewer).
pub fn brute_force_best_sum(scores: &[f64], l: usize) -> f64 {
    let c = scores.len();
    let take = l.min(c);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << c) {
        if mask.count_ones() as usize == take {
            let s: f64 = (0..c).filter(|i| mask & (1 << i) != 0).map(|i| scores[i]).sum();
            best = best.max(s);
        }
    }
    best
}

/// NDCV normalized by the best ordering of the list's own hits, found by
/// trying every placement of the hits.
pub fn brute_ndcv_hits(list: &[usize], l: usize, test: &[usize], value: &[f64]) -> f64 {
    let disc = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let top = &list[..list.len().min(l)];
    let mut hits: Vec<usize> = top.iter().copied().filter(|j| test.contains(j)).collect();
    let dcv: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, j)| test.contains(j))
        .map(|(i, j)| value[*j] * disc(i + 1))
        .sum();
    let mut best: f64 = 0.0;
    permute(&mut hits, 0, &mut |perm| {
        let s: f64 = perm.iter().enumerate().map(|(i, j)| value[*j] * disc(i + 1)).sum();
        best = best.max(s);
    });
    if best == 0.0 {
        0.0
    } else {
        dcv / best
    }
}

/// Straight-from-the-definition ranking metrics.
pub fn brute_metrics(list: &[usize], l: usize, test: &[usize], value: &[f64]) -> (f64, f64, f64) {
    let rel = |j: &usize| test.contains(j);
    let disc = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let top = &list[..list.len().min(l)];
    let precision = top.iter().filter(|j| rel(j)).count() as f64 / l as f64;

    let mut dcg = 0.0;
    let mut dcv = 0.0;
    for (i, j) in top.iter().enumerate() {
        if rel(j) {
            dcg += disc(i + 1);
            dcv += value[*j] * disc(i + 1);
        }
    }
    let mut idcg = 0.0;
    for r in 1..=l.min(test.len()) {
        idcg += disc(r);
    }
    // best value ordering found by trying every permutation of test items
    let mut idcv: f64 = 0.0;
    permute(&mut test.to_vec(), 0, &mut |perm| {
        let s: f64 = perm.iter().take(l).enumerate().map(|(i, j)| value[*j] * disc(i + 1)).sum();
        idcv = idcv.max(s);
    });
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    (precision, ratio(dcg, idcg), ratio(dcv, idcv))
}

fn permute(xs: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == xs.len() {
        f(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, f);
        xs.swap(k, i);
    }
}

/// Fraction of points whose label agrees with `truth` under the best label
/// permutation (both sides use labels `0..k`).
pub fn matched_accuracy(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut labels: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut labels, 0, &mut |perm| {
        let hits = pred.iter().zip(truth).filter(|(p, t)| perm.get(**p) == Some(*t)).count();
        best = best.max(hits);
    });
    best as f64 / pred.len() as f64
}
