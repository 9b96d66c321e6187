//! Binary container for reduction mappings.
//!
//! Layout (all integers `u64`, all reals `f64`, little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `HRBASIS1` |
//! | 8     | kind: 0 = linear basis, 1 = quadratic manifold |
//! | 8     | `n` (rows) |
//! | 8     | `M` (columns / modes) |
//! | 8·n·M | `Φ` (or `V`), row-major |
//! | 8·n·M(M+1)/2 | quadratic only: `Ω_{·ij}` slabs for `i <= j`, `i` outer |

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::mapping::{pair_count, LinearBasis, Mapping, QuadraticManifold};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HRBASIS1";

pub fn encode(mapping: &Mapping) -> Vec<u8> {
    let phi = mapping.linear_part();
    let (n, m) = phi.shape();
    let mut out = Vec::with_capacity(32 + 8 * n * (m + pair_count(m)));
    out.extend_from_slice(MAGIC);
    let kind: u64 = if mapping.is_linear() { 0 } else { 1 };
    for v in [kind, n as u64, m as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..n {
        for k in 0..m {
            out.extend_from_slice(&phi[(i, k)].to_le_bytes());
        }
    }
    if let Mapping::Quadratic(qm) = mapping {
        for p in qm.omega_packed().column_iter() {
            for v in p.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Mapping> {
    let mut cursor = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let s = bytes
            .get(cursor..cursor + len)
            .ok_or_else(|| Error::Format("basis container truncated".into()))?;
        cursor += len;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err(Error::Format("not a basis container".into()));
    }
    let mut header = [0u64; 3];
    for h in &mut header {
        *h = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
    }
    let [kind, n, m] = header;
    let (n, m) = (n as usize, m as usize);
    let mut read_f64 = |count: usize| -> Result<Vec<f64>> {
        let raw = take(8 * count)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    };
    let phi = DMatrix::from_row_slice(n, m, &read_f64(n * m)?);
    let mapping = match kind {
        0 => Mapping::Linear(LinearBasis::new(phi)?),
        1 => {
            let omega = DMatrix::from_column_slice(n, pair_count(m), &read_f64(n * pair_count(m))?);
            Mapping::Quadratic(QuadraticManifold::new(phi, omega)?)
        }
        k => return Err(Error::Format(format!("unknown basis kind {k}"))),
    };
    if cursor != bytes.len() {
        return Err(Error::Format("trailing bytes after basis container".into()));
    }
    Ok(mapping)
}

pub fn write(path: impl AsRef<Path>, mapping: &Mapping) -> Result<()> {
    fs::write(path, encode(mapping))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Mapping> {
    decode(&fs::read(path)?)
}
