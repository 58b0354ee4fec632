use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::retail::{self, RetailFilter};
use super::{build_matrices, InteractionMatrices, SplitMatrices, TransactionRecord};
use crate::error::{Error, Result};

const GENERIC_HEADER: [&str; 3] = ["user_id", "item_id", "expenditure"];

/// Read a transaction CSV, auto-detecting the schema from its header.
///
/// The generic form has columns `user_id,item_id,expenditure` (optionally
/// `quantity,unit_price`). A header with `Invoice` and `StockCode` columns is
/// read as the Online Retail II export and filtered by `filter`.
pub fn read_transactions(path: &Path, filter: &RetailFilter) -> Result<Vec<TransactionRecord>> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(path, 1, "header", e))?
        .clone();
    if retail::is_retail_header(&headers) {
        drop(reader);
        return retail::ingest_retail_csv(path, filter);
    }
    read_generic(path, reader, &headers)
}

fn read_generic<R: Read>(
    path: &Path,
    mut reader: csv::Reader<R>,
    headers: &csv::StringRecord,
) -> Result<Vec<TransactionRecord>> {
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut cols = [0usize; 3];
    for (slot, name) in cols.iter_mut().zip(GENERIC_HEADER) {
        *slot = column(name).ok_or_else(|| Error::csv(path, 1, name, "missing required column"))?;
    }
    let quantity = column("quantity");
    let price = column("unit_price");

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::csv(path, line, "record", e))?;
        let parse = |col: usize, name: &str| -> Result<f64> {
            let raw = row.get(col).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|e| Error::csv(path, line, name, format!("{raw:?}: {e}")))
        };
        let expenditure = parse(cols[2], "expenditure")?;
        let (q, p) = match (quantity, price) {
            (Some(qc), Some(pc)) if !row.get(qc).unwrap_or("").is_empty() => {
                (Some(parse(qc, "quantity")?), Some(parse(pc, "unit_price")?))
            }
            _ => (None, None),
        };
        out.push(TransactionRecord {
            user_id: row.get(cols[0]).unwrap_or("").to_string(),
            item_id: row.get(cols[1]).unwrap_or("").to_string(),
            quantity: q,
            unit_price: p,
            expenditure,
        });
    }
    Ok(out)
}

/// Read a triplet matrix CSV written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<InteractionMatrices> {
    build_matrices(&read_transactions(path, &RetailFilter::default())?)
}

/// Write `user_id,item_id,expenditure` triplets in row-major order.
///
/// Values use the shortest representation that parses back to the same
/// `f64`. Users or items without any entry are written once with zero
/// expenditure so the index sets survive a round trip.
pub fn write_matrix_csv<W: Write>(w: W, m: &InteractionMatrices) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    wr.write_record(GENERIC_HEADER).map_err(io)?;
    let mut item_seen = vec![false; m.n_items()];
    for (u, j, v) in m.expenditure().triplets() {
        item_seen[j] = true;
        wr.write_record([m.users()[u].as_str(), m.items()[j].as_str(), &v.to_string()])
            .map_err(io)?;
    }
    for u in 0..m.n_users() {
        if m.basket(u).is_empty() {
            wr.write_record([m.users()[u].as_str(), m.items()[0].as_str(), "0"])
                .map_err(io)?;
        }
    }
    for (j, seen) in item_seen.iter().enumerate() {
        if !seen {
            wr.write_record([m.users()[0].as_str(), m.items()[j].as_str(), "0"])
                .map_err(io)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Write the masked `(user_id, item_id)` pairs, one per line after a header.
pub fn write_split_manifest<W: Write>(w: W, split: &SplitMatrices) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    wr.write_record(["user_id", "item_id"]).map_err(io)?;
    let (users, items) = (split.train.users(), split.train.items());
    for (u, basket) in split.test_baskets.iter().enumerate() {
        for &j in basket {
            wr.write_record([users[u].as_str(), items[j].as_str()]).map_err(io)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Read a split manifest back into per-user test baskets indexed like `train`.
pub fn read_split_manifest(path: &Path, train: &InteractionMatrices) -> Result<Vec<Vec<usize>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, 0, "file", e))?;
    let mut baskets = vec![Vec::new(); train.n_users()];
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::csv(path, line, "record", e))?;
        let uid = row.get(0).unwrap_or("");
        let iid = row.get(1).unwrap_or("");
        let u = train
            .user_index(uid)
            .ok_or_else(|| Error::csv(path, line, "user_id", format!("unknown user {uid:?}")))?;
        let j = train
            .item_index(iid)
            .ok_or_else(|| Error::csv(path, line, "item_id", format!("unknown item {iid:?}")))?;
        baskets[u].push(j);
    }
    for b in &mut baskets {
        b.sort_unstable();
        b.dedup();
    }
    Ok(baskets)
}

#[cfg(test)]
mod tests {
    use super::super::split_by_masking;
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn generic_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.csv",
            "user_id,item_id,expenditure\nu2,b,0.1\nu1,a,3\nu1,a,0.2\nu3,c,0\n",
        );
        let m = read_matrix_csv(&p).unwrap();
        assert_eq!(m.users(), &["u1", "u2", "u3"]);
        assert!(m.basket(2).is_empty());
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let q = write(&dir, "m.csv", std::str::from_utf8(&buf).unwrap());
        assert_eq!(read_matrix_csv(&q).unwrap(), m);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "user_id,item\nu,a\n");
        let err = read_transactions(&p, &RetailFilter::default()).unwrap_err();
        assert!(err.to_string().contains("item_id"), "{err}");
        let p = write(&dir, "t2.csv", "user_id,item_id,expenditure\nu,a,x\n");
        let err = read_transactions(&p, &RetailFilter::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn manifest_roundtrip() {
        let mut log = Vec::new();
        for u in 0..4 {
            for j in 0..6 {
                log.push(TransactionRecord::new(format!("u{u}"), format!("i{j}"), 1.0 + (u * j) as f64));
            }
        }
        let m = build_matrices(&log).unwrap();
        let split = split_by_masking(&m, 0.5, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut buf = Vec::new();
        write_split_manifest(&mut buf, &split).unwrap();
        let p = write(&dir, "mask.csv", std::str::from_utf8(&buf).unwrap());
        assert_eq!(read_split_manifest(&p, &split.train).unwrap(), split.test_baskets);
    }
}
