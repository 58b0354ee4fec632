//! Row-major sparse storage with sorted column indices.

use crate::error::{Error, Result};

/// Borrowed view of one sparse real-valued row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseRow<'a> {
    pub dim: usize,
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    /// Checked constructor: indices strictly ascending and below `dim`.
    pub fn new(dim: usize, indices: &'a [usize], values: &'a [f64]) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: indices.len(),
                right: values.len(),
            });
        }
        check_indices(dim, indices)?;
        Ok(SparseRow { dim, indices, values })
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Euclidean norm, summed in ascending index order.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn binary(&self) -> BinaryRow<'a> {
        BinaryRow {
            dim: self.dim,
            indices: self.indices,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&j, &v) in self.indices.iter().zip(self.values) {
            out[j] = v;
        }
        out
    }
}

/// Support of a 0/1 row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryRow<'a> {
    pub dim: usize,
    pub indices: &'a [usize],
}

impl<'a> BinaryRow<'a> {
    pub fn new(dim: usize, indices: &'a [usize]) -> Result<Self> {
        check_indices(dim, indices)?;
        Ok(BinaryRow { dim, indices })
    }
}

fn check_indices(dim: usize, indices: &[usize]) -> Result<()> {
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sparse row indices must be strictly ascending".into(),
        ));
    }
    if let Some(&last) = indices.last() {
        if last >= dim {
            return Err(Error::InvalidParameter(format!(
                "sparse row index {last} out of range for dimension {dim}"
            )));
        }
    }
    Ok(())
}

/// Owned sparse vector, mostly for tests and synthetic inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Keep the non-zero entries of a dense slice.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .unzip();
        SparseVec {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn as_row(&self) -> SparseRow<'_> {
        SparseRow {
            dim: self.dim,
            indices: &self.indices,
            values: &self.values,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from per-row `(column, value)` lists already sorted by column.
    pub fn from_sorted_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            let start = indices.len();
            for &(j, v) in row {
                indices.push(j);
                values.push(v);
            }
            check_indices(ncols, &indices[start..])?;
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Same sparsity pattern, values replaced by `f(value)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        CsrMatrix {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        SparseRow {
            dim: self.ncols,
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    /// All stored values in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.indptr == other.indptr
            && self.indices == other.indices
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row(r);
        match row.indices.binary_search(&c) {
            Ok(pos) => row.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Iterate `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let row = self.row(r);
            row.indices
                .iter()
                .zip(row.values)
                .map(move |(&c, &v)| (r, c, v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_roundtrip_rows() {
        let rows = vec![vec![(0, 1.0), (2, 3.0)], vec![], vec![(1, 2.0)]];
        let m = CsrMatrix::from_sorted_rows(3, &rows).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(0).indices, &[0, 2]);
        assert_eq!(m.row(1).nnz(), 0);
        assert_eq!(m.get(2, 1), 2.0);
        assert_eq!(m.get(2, 2), 0.0);
        let t: Vec<_> = m.triplets().collect();
        assert_eq!(t, vec![(0, 0, 1.0), (0, 2, 3.0), (2, 1, 2.0)]);
    }

    #[test]
    fn unsorted_rows_rejected() {
        assert!(CsrMatrix::from_sorted_rows(3, &[vec![(2, 1.0), (0, 1.0)]]).is_err());
        assert!(CsrMatrix::from_sorted_rows(2, &[vec![(2, 1.0)]]).is_err());
        assert!(SparseRow::new(3, &[0, 1], &[1.0]).is_err());
    }

    #[test]
    fn dense_conversion() {
        let v = SparseVec::from_dense(&[0.0, 0.5, 0.0, 2.0]);
        assert_eq!(v.indices, vec![1, 3]);
        assert_eq!(v.as_row().to_dense(), vec![0.0, 0.5, 0.0, 2.0]);
        assert!((v.as_row().norm() - (4.25f64).sqrt()).abs() < 1e-15);
    }
}
