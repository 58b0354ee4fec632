//! Binary persistence: `BSEGDM1`, n (u64 LE), metric tag (u8), then the
//! strict upper triangle row-major as f64 LE.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DissimilarityMatrix, MetricKind};
use crate::error::{Error, Result};

const MAGIC: &[u8; 7] = b"BSEGDM1";

pub fn write_dissimilarity<W: Write>(mut w: W, dm: &DissimilarityMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(dm.n() as u64).to_le_bytes())?;
    w.write_all(&[dm.metric().tag()])?;
    for d in dm.upper_triangle() {
        w.write_all(&d.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dissimilarity<R: Read>(mut r: R) -> Result<DissimilarityMatrix> {
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dissimilarity matrix file (bad magic)".into()));
    }
    let mut n_bytes = [0u8; 8];
    r.read_exact(&mut n_bytes)?;
    let n = usize::try_from(u64::from_le_bytes(n_bytes))
        .map_err(|_| Error::Format("matrix size overflows usize".into()))?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let metric = MetricKind::from_tag(tag[0])
        .ok_or_else(|| Error::Format(format!("unknown metric tag {}", tag[0])))?;
    let mut upper = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for u in 0..n {
        let mut row = Vec::with_capacity(n - u - 1);
        for _ in (u + 1)..n {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format("truncated dissimilarity matrix".into()))?;
            row.push(f64::from_le_bytes(buf));
        }
        upper.push(row);
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after dissimilarity matrix".into()));
    }
    Ok(DissimilarityMatrix::from_upper(n, metric, upper))
}

pub fn save_dissimilarity(path: &Path, dm: &DissimilarityMatrix) -> Result<()> {
    write_dissimilarity(BufWriter::new(File::create(path)?), dm)
}

pub fn load_dissimilarity(path: &Path) -> Result<DissimilarityMatrix> {
    read_dissimilarity(BufReader::new(File::open(path)?))
}
