//! Precision@L, NDCG@L and NDCV@L against held-out baskets.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::recommend::RecommendationList;

/// Per-item value lookup for NDCV.
pub trait ItemValues {
    fn value(&self, item: usize) -> Option<f64>;
}

impl ItemValues for [f64] {
    fn value(&self, item: usize) -> Option<f64> {
        self.get(item).copied()
    }
}

impl ItemValues for Vec<f64> {
    fn value(&self, item: usize) -> Option<f64> {
        self.get(item).copied()
    }
}

impl ItemValues for HashMap<usize, f64> {
    fn value(&self, item: usize) -> Option<f64> {
        self.get(&item).copied()
    }
}

#[inline]
fn discount(rank: usize) -> f64 {
    // rank is 1-based
    1.0 / ((rank + 1) as f64).log2()
}

fn relevant(test: &[usize], j: usize) -> bool {
    test.binary_search(&j).is_ok()
}

/// Hits in the list divided by the requested L. `test` must be sorted.
pub fn precision_at_l(rec: &RecommendationList, test: &[usize]) -> f64 {
    let hits = rec.items.iter().take(rec.l).filter(|&&j| relevant(test, j)).count();
    hits as f64 / rec.l as f64
}

/// Binary-relevance DCG over the ideal DCG of min(L, |test|) hits.
pub fn ndcg_at_l(rec: &RecommendationList, test: &[usize]) -> f64 {
    let dcg: f64 = rec
        .items
        .iter()
        .take(rec.l)
        .enumerate()
        .filter(|(_, &j)| relevant(test, j))
        .map(|(r, _)| discount(r + 1))
        .sum();
    let idcg: f64 = (1..=rec.l.min(test.len())).map(discount).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Value-weighted DCG over the best achievable value-weighted DCG, which
/// places the test items at the top in descending value order.
pub fn ndcv_at_l<V: ItemValues + ?Sized>(rec: &RecommendationList, test: &[usize], values: &V) -> Result<f64> {
    let lookup = |j: usize| values.value(j).ok_or(Error::MissingValue(j));
    let mut dcv = 0.0;
    for (r, &j) in rec.items.iter().take(rec.l).enumerate() {
        let v = lookup(j)?;
        if relevant(test, j) {
            dcv += v * discount(r + 1);
        }
    }
    let mut ideal = test.iter().map(|&j| lookup(j)).collect::<Result<Vec<f64>>>()?;
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcv: f64 = ideal
        .iter()
        .take(rec.l)
        .enumerate()
        .map(|(r, v)| v * discount(r + 1))
        .sum();
    Ok(if idcv == 0.0 { 0.0 } else { dcv / idcv })
}

/// NDCV of a list whose normalizer only reorders the list's own hits by
/// descending value. A list without hits scores 0.
pub fn ndcv_hits_at_l<V: ItemValues + ?Sized>(rec: &RecommendationList, test: &[usize], values: &V) -> Result<f64> {
    let mut dcv = 0.0;
    let mut hits = Vec::new();
    for (r, &j) in rec.items.iter().take(rec.l).enumerate() {
        let v = values.value(j).ok_or(Error::MissingValue(j))?;
        if relevant(test, j) {
            dcv += v * discount(r + 1);
            hits.push(v);
        }
    }
    hits.sort_by(|a, b| b.total_cmp(a));
    let idcv: f64 = hits.iter().enumerate().map(|(r, v)| v * discount(r + 1)).sum();
    Ok(if idcv == 0.0 { 0.0 } else { dcv / idcv })
}

/// Which ranking normalizes NDCV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ValueIdeal {
    /// The list's relevant items in descending value order.
    #[default]
    Hits,
    /// The user's whole test basket in descending value order.
    TestBasket,
}

impl std::str::FromStr for ValueIdeal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hits" => Ok(ValueIdeal::Hits),
            "test" | "test_basket" => Ok(ValueIdeal::TestBasket),
            other => Err(Error::Config(format!("unknown NDCV ideal {other:?}"))),
        }
    }
}

impl std::fmt::Display for ValueIdeal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ValueIdeal::Hits => "hits",
            ValueIdeal::TestBasket => "test",
        })
    }
}

pub fn ndcv<V: ItemValues + ?Sized>(
    rec: &RecommendationList,
    test: &[usize],
    values: &V,
    ideal: ValueIdeal,
) -> Result<f64> {
    match ideal {
        ValueIdeal::Hits => ndcv_hits_at_l(rec, test, values),
        ValueIdeal::TestBasket => ndcv_at_l(rec, test, values),
    }
}

/// The three scores of one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserScores {
    pub precision: f64,
    pub ndcg: f64,
    pub ndcv: f64,
}

pub fn score_user<V: ItemValues + ?Sized>(
    rec: &RecommendationList,
    test: &[usize],
    values: &V,
    ideal: ValueIdeal,
) -> Result<UserScores> {
    Ok(UserScores {
        precision: precision_at_l(rec, test),
        ndcg: ndcg_at_l(rec, test),
        ndcv: ndcv(rec, test, values, ideal)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub ndcg: f64,
    pub ndcv: f64,
    pub l: usize,
    pub users_evaluated: usize,
    pub users_skipped: usize,
}

/// Means over evaluated users, folded in the order given.
pub fn aggregate(per_user: &[UserScores], skipped: usize, l: usize) -> Result<EvalReport> {
    if per_user.is_empty() {
        return Err(Error::NoUsersEvaluated);
    }
    let n = per_user.len() as f64;
    let mean = |f: fn(&UserScores) -> f64| per_user.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        precision: mean(|s| s.precision),
        ndcg: mean(|s| s.ndcg),
        ndcv: mean(|s| s.ndcv),
        l,
        users_evaluated: per_user.len(),
        users_skipped: skipped,
    })
}

/// Score `recs` (one per user, indexed by `rec.user`) against sorted test
/// baskets; users with an empty test basket are skipped.
pub fn evaluate<V: ItemValues + ?Sized>(
    recs: &[RecommendationList],
    test_baskets: &[Vec<usize>],
    values: &V,
    ideal: ValueIdeal,
) -> Result<EvalReport> {
    let l = recs.first().map_or(0, |r| r.l);
    let mut per_user = Vec::with_capacity(recs.len());
    let mut skipped = 0;
    for rec in recs {
        let test = &test_baskets[rec.user];
        if test.is_empty() {
            skipped += 1;
        } else {
            per_user.push(score_user(rec, test, values, ideal)?);
        }
    }
    aggregate(&per_user, skipped, l)
}
