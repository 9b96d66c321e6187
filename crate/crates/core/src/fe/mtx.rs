//! Matrix Market export/import for oracle cross-checks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fe::sparse::SparseSymMatrix;

/// Writes `coordinate real symmetric` with the lower triangle, 1-based.
pub fn write_sparse_symmetric(path: impl AsRef<Path>, a: &SparseSymMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let entries: Vec<_> = a.iter_upper().collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.17e}", j + 1, i + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `array real general` in column-major order.
pub fn write_dense(path: impl AsRef<Path>, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for v in a.iter() {
        writeln!(w, "{:.17e}", v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads either layout written above into a dense matrix.
pub fn read_dense(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty Matrix Market file".into()))??;
    let header = header.to_ascii_lowercase();
    let symmetric = header.contains("symmetric");
    let coordinate = header.contains("coordinate");
    let mut body = lines
        .map_while(|l| l.ok())
        .filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let size = body
        .next()
        .ok_or_else(|| Error::Format("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("bad size line: {size}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(Error::Format(format!("bad size line: {size}")));
    }
    let mut a = DMatrix::zeros(dims[0], dims[1]);
    let parse = |t: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::Format(format!("bad value: {t}")))
    };
    if coordinate {
        for line in body {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(Error::Format(format!("bad entry: {line}")));
            }
            let i: usize = parse(t[0])? as usize - 1;
            let j: usize = parse(t[1])? as usize - 1;
            let v = parse(t[2])?;
            a[(i, j)] = v;
            if symmetric {
                a[(j, i)] = v;
            }
        }
    } else {
        let values: Vec<f64> = body.map(|l| parse(l.trim())).collect::<Result<_>>()?;
        if values.len() != dims[0] * dims[1] {
            return Err(Error::Format("array entry count mismatch".into()));
        }
        a = DMatrix::from_column_slice(dims[0], dims[1], &values);
    }
    Ok(a)
}
