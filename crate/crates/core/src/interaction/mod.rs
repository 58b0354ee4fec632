//! Expenditure, binary and revenue-share user–item matrices.
//!
//! All three matrices share one sparsity pattern: an entry is stored iff the
//! period-total expenditure `m_uj` is positive. The share matrix divides every
//! entry by the grand total, so it sums to one over all users and items.

mod csv_io;
mod retail;

use std::collections::BTreeMap;

use rand::seq::index;

pub use csv_io::{
    read_matrix_csv, read_split_manifest, read_transactions, write_matrix_csv,
    write_split_manifest,
};
pub use retail::{ingest_retail_csv, RetailFilter};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::sparse::{BinaryRow, CsrMatrix, SparseRow};

/// One purchase event.
#[derive(Clone, Debug, PartialEq)]
pub struct TransactionRecord {
    pub user_id: String,
    pub item_id: String,
    pub quantity: Option<f64>,
    pub unit_price: Option<f64>,
    pub expenditure: f64,
}

impl TransactionRecord {
    pub fn new(user_id: impl Into<String>, item_id: impl Into<String>, expenditure: f64) -> Self {
        TransactionRecord {
            user_id: user_id.into(),
            item_id: item_id.into(),
            quantity: None,
            unit_price: None,
            expenditure,
        }
    }

    /// Record with `expenditure = quantity × unit_price`.
    pub fn priced(
        user_id: impl Into<String>,
        item_id: impl Into<String>,
        quantity: f64,
        unit_price: f64,
    ) -> Self {
        TransactionRecord {
            user_id: user_id.into(),
            item_id: item_id.into(),
            quantity: Some(quantity),
            unit_price: Some(unit_price),
            expenditure: quantity * unit_price,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord { index, reason };
        if !self.expenditure.is_finite() || self.expenditure < 0.0 {
            return Err(invalid(format!("expenditure {} is negative or not finite", self.expenditure)));
        }
        match (self.quantity, self.unit_price) {
            (Some(q), Some(p)) => {
                if q < 0.0 || p < 0.0 {
                    return Err(invalid(format!("negative quantity {q} or price {p}")));
                }
                let expected = q * p;
                let scale = expected.abs().max(self.expenditure.abs());
                if (expected - self.expenditure).abs() > 1e-9 * scale {
                    return Err(invalid(format!(
                        "expenditure {} != quantity {q} × price {p}",
                        self.expenditure
                    )));
                }
            }
            (None, None) => {}
            _ => return Err(invalid("quantity and unit price must be given together".into())),
        }
        Ok(())
    }
}

/// Aligned M, D and S over fixed user and item index sets.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrices {
    users: Vec<String>,
    items: Vec<String>,
    expenditure: CsrMatrix,
    share: CsrMatrix,
    total: f64,
}

impl InteractionMatrices {
    /// Build from per-user `(item, expenditure)` lists sorted by item.
    ///
    /// `users` and `items` must be strictly ascending. Zero entries are
    /// dropped; the grand total must be positive.
    pub fn from_rows(
        users: Vec<String>,
        items: Vec<String>,
        rows: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self> {
        if rows.len() != users.len() {
            return Err(Error::DimensionMismatch {
                left: rows.len(),
                right: users.len(),
            });
        }
        for ids in [&users, &items] {
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "identifiers must be unique and sorted".into(),
                ));
            }
        }
        let rows: Vec<Vec<(usize, f64)>> = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|&(_, m)| m != 0.0).collect())
            .collect();
        let expenditure = CsrMatrix::from_sorted_rows(items.len(), &rows)?;
        if let Some(bad) = expenditure.values().iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid expenditure {bad}")));
        }
        let total: f64 = expenditure.values().iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateMatrix("total expenditure is zero".into()));
        }
        let share = expenditure.map_values(|m| m / total);
        Ok(InteractionMatrices {
            users,
            items,
            expenditure,
            share,
            total,
        })
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn expenditure(&self) -> &CsrMatrix {
        &self.expenditure
    }

    pub fn share(&self) -> &CsrMatrix {
        &self.share
    }

    pub fn expenditure_row(&self, u: usize) -> SparseRow<'_> {
        self.expenditure.row(u)
    }

    pub fn share_row(&self, u: usize) -> SparseRow<'_> {
        self.share.row(u)
    }

    pub fn binary_row(&self, u: usize) -> BinaryRow<'_> {
        self.expenditure.row(u).binary()
    }

    /// Items purchased by user `u`, ascending.
    pub fn basket(&self, u: usize) -> &[usize] {
        self.expenditure.row(u).indices
    }

    /// Σ m_uj.
    pub fn total_expenditure(&self) -> f64 {
        self.total
    }

    /// E = max m_uj.
    pub fn max_expenditure(&self) -> f64 {
        self.expenditure.values().iter().copied().fold(0.0, f64::max)
    }

    /// Number of stored (purchased) pairs.
    pub fn nnz(&self) -> usize {
        self.expenditure.nnz()
    }

    /// Fraction of zero entries in the n×p matrix.
    pub fn sparsity(&self) -> f64 {
        let cells = (self.n_users() * self.n_items()) as f64;
        1.0 - self.nnz() as f64 / cells
    }

    /// Per-item revenue share Σ_u s_uj, summed in ascending user order.
    pub fn item_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_items()];
        for (_, j, s) in self.share.triplets() {
            out[j] += s;
        }
        out
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.binary_search_by(|u| u.as_str().cmp(id)).ok()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.binary_search_by(|i| i.as_str().cmp(id)).ok()
    }

    /// Per-user `(item, expenditure)` lists.
    fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n_users())
            .map(|u| {
                let r = self.expenditure.row(u);
                r.indices.iter().copied().zip(r.values.iter().copied()).collect()
            })
            .collect()
    }
}

/// Aggregate a transaction log into matrices.
///
/// Duplicate `(user, item)` pairs are summed in log order. Users and items
/// are indexed in lexicographic identifier order; identifiers that only ever
/// carry zero expenditure keep their index but contribute no entries.
pub fn build_matrices(log: &[TransactionRecord]) -> Result<InteractionMatrices> {
    if log.is_empty() {
        return Err(Error::EmptyInput("transaction log"));
    }
    for (i, rec) in log.iter().enumerate() {
        rec.validate(i)?;
    }
    let mut users: BTreeMap<&str, usize> = BTreeMap::new();
    let mut items: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in log {
        users.insert(&rec.user_id, 0);
        items.insert(&rec.item_id, 0);
    }
    for (i, v) in users.values_mut().enumerate() {
        *v = i;
    }
    for (i, v) in items.values_mut().enumerate() {
        *v = i;
    }
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for rec in log {
        let key = (users[rec.user_id.as_str()], items[rec.item_id.as_str()]);
        *cells.entry(key).or_insert(0.0) += rec.expenditure;
    }
    let mut rows = vec![Vec::new(); users.len()];
    for ((u, j), m) in cells {
        rows[u].push((j, m));
    }
    let total: f64 = rows.iter().flatten().map(|&(_, m)| m).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateMatrix("total expenditure is zero".into()));
    }
    InteractionMatrices::from_rows(
        users.into_keys().map(str::to_owned).collect(),
        items.into_keys().map(str::to_owned).collect(),
        rows,
    )
}

/// Training matrices plus the per-user held-out baskets.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitMatrices {
    pub train: InteractionMatrices,
    /// Masked item indices per user index, ascending.
    pub test_baskets: Vec<Vec<usize>>,
    pub mask_fraction: f64,
    /// Users whose rounded mask would have emptied their training basket.
    pub forced_keep: usize,
}

impl SplitMatrices {
    pub fn test_basket(&self, u: usize) -> &[usize] {
        &self.test_baskets[u]
    }

    /// Number of masked `(user, item)` pairs.
    pub fn n_masked(&self) -> usize {
        self.test_baskets.iter().map(Vec::len).sum()
    }
}

/// Mask `⌊fraction · |basket|⌉` items of every user's basket into a test set.
///
/// Items are drawn uniformly without replacement from a per-user stream keyed
/// by `(seed, user index)`. At least one item always stays in training; the
/// number of users where that rule kicked in is reported as `forced_keep`.
/// The training share matrix is renormalized over the retained entries.
pub fn split_by_masking(
    full: &InteractionMatrices,
    fraction: f64,
    seed: u64,
) -> Result<SplitMatrices> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mask fraction {fraction} outside (0, 1)"
        )));
    }
    let full_rows = full.rows();
    let mut train_rows = Vec::with_capacity(full.n_users());
    let mut test_baskets = Vec::with_capacity(full.n_users());
    let mut forced_keep = 0;
    for (u, row) in full_rows.into_iter().enumerate() {
        let size = row.len();
        let mut masked = rng::round_half_up(fraction * size as f64);
        if size > 0 && masked >= size {
            masked = size - 1;
            forced_keep += 1;
        }
        let mut picked = if masked > 0 {
            let mut r = rng::stream(seed, Domain::Mask, u as u64);
            index::sample(&mut r, size, masked).into_vec()
        } else {
            Vec::new()
        };
        picked.sort_unstable();
        let mut is_masked = vec![false; size];
        for &pos in &picked {
            is_masked[pos] = true;
        }
        let mut keep = Vec::with_capacity(size - masked);
        let mut test = Vec::with_capacity(masked);
        for (pos, (j, m)) in row.into_iter().enumerate() {
            if is_masked[pos] {
                test.push(j);
            } else {
                keep.push((j, m));
            }
        }
        train_rows.push(keep);
        test_baskets.push(test);
    }
    if forced_keep > 0 {
        log::warn!("{forced_keep} users kept one training item to avoid an empty basket");
    }
    let train =
        InteractionMatrices::from_rows(full.users.clone(), full.items.clone(), train_rows)?;
    Ok(SplitMatrices {
        train,
        test_baskets,
        mask_fraction: fraction,
        forced_keep,
    })
}
