//! Binary snapshot container.
//!
//! Little-endian: magic `HRSNAP01`, `u64` sample count, `u64` dimension,
//! then per sample `t`, `x`, `v`, `a` as `f64`.

use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::integrator::newmark::Trajectory;

const MAGIC: &[u8; 8] = b"HRSNAP01";

pub fn encode(traj: &Trajectory) -> Vec<u8> {
    let n = traj.x.first().map_or(0, |x| x.len());
    let mut out = Vec::with_capacity(24 + traj.len() * (1 + 3 * n) * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for k in 0..traj.len() {
        out.extend_from_slice(&traj.times[k].to_le_bytes());
        for vec in [&traj.x[k], &traj.v[k], &traj.a[k]] {
            for value in vec.iter() {
                out.extend_from_slice(&value.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Trajectory> {
    let bad = |msg: &str| Error::Format(format!("snapshot container: {msg}"));
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(bad("bad header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let count = word(8) as usize;
    let n = word(16) as usize;
    let expected = count
        .checked_mul(1 + 3 * n)
        .and_then(|w| w.checked_mul(8))
        .and_then(|w| w.checked_add(24))
        .ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != expected {
        return Err(bad(&format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut values = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let vector = |values: &mut dyn Iterator<Item = f64>| DVector::from_iterator(n, values.take(n));
    let mut traj = Trajectory::default();
    for _ in 0..count {
        traj.times.push(values.next().unwrap());
        traj.x.push(vector(&mut values));
        traj.v.push(vector(&mut values));
        traj.a.push(vector(&mut values));
    }
    Ok(traj)
}

pub fn write(path: impl AsRef<Path>, traj: &Trajectory) -> Result<()> {
    fs::write(path, encode(traj))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Trajectory> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(n in 0usize..6, count in 0usize..5, seed in any::<u64>()) {
            let mut traj = Trajectory::default();
            let val = |k: usize, i: usize, j: usize| (seed as f64 * 1e-9 + (k * 31 + i * 7 + j) as f64).sin();
            for k in 0..count {
                traj.times.push(k as f64 * 0.1);
                traj.x.push(DVector::from_fn(n, |i, _| val(k, i, 0)));
                traj.v.push(DVector::from_fn(n, |i, _| val(k, i, 1)));
                traj.a.push(DVector::from_fn(n, |i, _| val(k, i, 2)));
            }
            let back = decode(&encode(&traj)).unwrap();
            prop_assert_eq!(back.times, traj.times);
            prop_assert_eq!(back.x, traj.x);
            prop_assert_eq!(back.v, traj.v);
            prop_assert_eq!(back.a, traj.a);
        }
    }

    #[test]
    fn rejects_truncation() {
        let mut traj = Trajectory::default();
        traj.times.push(0.0);
        traj.x.push(DVector::zeros(3));
        traj.v.push(DVector::zeros(3));
        traj.a.push(DVector::zeros(3));
        let bytes = encode(&traj);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"HRBASIS1").is_err());
    }
}
