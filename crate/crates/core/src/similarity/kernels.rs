//! Per-pair dissimilarity kernels over sparse rows.
//!
//! Every kernel walks the supports in ascending column order, so results do
//! not depend on how pairs are scheduled across workers.

use crate::error::{Error, Result};
use crate::sparse::{BinaryRow, SparseRow};

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// `sqrt(Σ_j (a_j − b_j)²)` over the union of supports.
pub fn euclidean(a: SparseRow<'_>, b: SparseRow<'_>) -> Result<f64> {
    same_dim(a.dim, b.dim)?;
    Ok(euclidean_unchecked(a, b))
}

pub(crate) fn euclidean_unchecked(a: SparseRow<'_>, b: SparseRow<'_>) -> f64 {
    let (ai, av, bi, bv) = (a.indices, a.values, b.indices, b.values);
    let (mut i, mut k) = (0, 0);
    let mut acc = 0.0;
    while i < ai.len() && k < bi.len() {
        let d = match ai[i].cmp(&bi[k]) {
            std::cmp::Ordering::Less => {
                i += 1;
                av[i - 1]
            }
            std::cmp::Ordering::Greater => {
                k += 1;
                bv[k - 1]
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                k += 1;
                av[i - 1] - bv[k - 1]
            }
        };
        acc += d * d;
    }
    for &v in &av[i..] {
        acc += v * v;
    }
    for &v in &bv[k..] {
        acc += v * v;
    }
    acc.sqrt()
}

/// Inner product over the intersection of supports.
pub(crate) fn dot(a: SparseRow<'_>, b: SparseRow<'_>) -> f64 {
    let (ai, av, bi, bv) = (a.indices, a.values, b.indices, b.values);
    let (mut i, mut k) = (0, 0);
    let mut acc = 0.0;
    while i < ai.len() && k < bi.len() {
        match ai[i].cmp(&bi[k]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                acc += av[i] * bv[k];
                i += 1;
                k += 1;
            }
        }
    }
    acc
}

/// `1 − a·b / (‖a‖‖b‖)`, clamped to `[0, 1]` against rounding.
///
/// A zero-norm operand yields 1, including zero against zero.
pub fn cosine(a: SparseRow<'_>, b: SparseRow<'_>) -> Result<f64> {
    same_dim(a.dim, b.dim)?;
    Ok(cosine_with_norms(a, b, a.norm(), b.norm()))
}

pub(crate) fn cosine_with_norms(a: SparseRow<'_>, b: SparseRow<'_>, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot(a, b) / (na * nb)).clamp(0.0, 1.0)
}

/// `1 − |a ∩ b| / |a ∪ b|`; two empty baskets are at distance 0.
pub fn jaccard(a: BinaryRow<'_>, b: BinaryRow<'_>) -> Result<f64> {
    same_dim(a.dim, b.dim)?;
    Ok(jaccard_unchecked(a, b))
}

pub(crate) fn jaccard_unchecked(a: BinaryRow<'_>, b: BinaryRow<'_>) -> f64 {
    let (ai, bi) = (a.indices, b.indices);
    let (mut i, mut k, mut inter) = (0, 0, 0usize);
    while i < ai.len() && k < bi.len() {
        match ai[i].cmp(&bi[k]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                k += 1;
            }
        }
    }
    let union = ai.len() + bi.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseVec;

    fn sv(d: &[f64]) -> SparseVec {
        SparseVec::from_dense(d)
    }

    #[test]
    fn euclidean_hand_values() {
        let a = sv(&[0.3, 0.0, 0.0]);
        let b = sv(&[0.0, 0.4, 0.0]);
        assert!((euclidean(a.as_row(), b.as_row()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(euclidean(a.as_row(), a.as_row()).unwrap(), 0.0);
        let c = sv(&[0.3, 0.0]);
        assert!(euclidean(a.as_row(), c.as_row()).is_err());
    }

    #[test]
    fn cosine_hand_values() {
        let a = sv(&[1.0, 1.0, 0.0]);
        let b = sv(&[1.0, 0.0, 0.0]);
        let expected = 1.0 - 1.0 / 2f64.sqrt();
        assert!((cosine(a.as_row(), b.as_row()).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.29289).abs() < 1e-5);
        assert!(cosine(a.as_row(), a.as_row()).unwrap() < 1e-12);
        let c = sv(&[0.0, 0.0, 2.0]);
        assert_eq!(cosine(b.as_row(), c.as_row()).unwrap(), 1.0);
        let z = sv(&[0.0, 0.0, 0.0]);
        assert_eq!(cosine(z.as_row(), b.as_row()).unwrap(), 1.0);
        assert_eq!(cosine(z.as_row(), z.as_row()).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_hand_values() {
        let a = BinaryRow::new(6, &[1, 2, 3]).unwrap();
        let b = BinaryRow::new(6, &[2, 3, 4]).unwrap();
        assert_eq!(jaccard(a, b).unwrap(), 0.5);
        assert_eq!(jaccard(a, a).unwrap(), 0.0);
        let c = BinaryRow::new(6, &[0, 5]).unwrap();
        assert_eq!(jaccard(a, c).unwrap(), 1.0);
        let e = BinaryRow::new(6, &[]).unwrap();
        assert_eq!(jaccard(e, e).unwrap(), 0.0);
        assert_eq!(jaccard(e, a).unwrap(), 1.0);
    }
}
