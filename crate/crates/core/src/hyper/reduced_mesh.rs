//! Sampled element set with positive weights, and its text file format.
//!
//! ```text
//! # hyperreduce reduced mesh
//! n_elements 400
//! size 6
//! tau 1.0000000000000000e-2
//! residual 9.7104519852037117e-3
//! n_t 200
//! terms inertial,damping,internal
//! hash 3f1c...
//! 17 1.2345678901234567e1
//! ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rom::TermSelection;

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub n_t: usize,
    pub terms: TermSelection,
    /// Hex digest of the mapping container the mesh was trained against.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedMesh {
    /// Total number of elements of the underlying mesh.
    pub n_elements: usize,
    /// Element ids, ascending.
    pub elements: Vec<usize>,
    pub weights: Vec<f64>,
    pub tau: f64,
    /// Achieved `‖Gξ − b‖ / ‖b‖`.
    pub residual: f64,
    pub provenance: Provenance,
}

impl ReducedMesh {
    /// All elements with unit weight.
    pub fn full(n_elements: usize, terms: TermSelection) -> Self {
        Self {
            n_elements,
            elements: (0..n_elements).collect(),
            weights: vec![1.0; n_elements],
            tau: 0.0,
            residual: 0.0,
            provenance: Provenance {
                n_t: 0,
                terms,
                hash: String::new(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::EmptyReducedMesh);
        }
        if self.elements.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                what: "reduced mesh weights",
                expected: self.elements.len(),
                found: self.weights.len(),
            });
        }
        if self.elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format(
                "reduced mesh element ids must be strictly ascending".into(),
            ));
        }
        if let Some(&last) = self.elements.last() {
            if last >= self.n_elements {
                return Err(Error::Format(format!(
                    "element id {last} out of range for {} elements",
                    self.n_elements
                )));
            }
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Format(format!("non-positive weight {w}")));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# hyperreduce reduced mesh");
        let _ = writeln!(s, "n_elements {}", self.n_elements);
        let _ = writeln!(s, "size {}", self.elements.len());
        let _ = writeln!(s, "tau {:.16e}", self.tau);
        let _ = writeln!(s, "residual {:.16e}", self.residual);
        let _ = writeln!(s, "n_t {}", self.provenance.n_t);
        let _ = writeln!(s, "terms {}", self.provenance.terms);
        let _ = writeln!(s, "hash {}", self.provenance.hash);
        for (e, w) in self.elements.iter().zip(&self.weights) {
            let _ = writeln!(s, "{e} {w:.16e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("reduced mesh: {msg}"));
        let mut lines = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| bad(&format!("missing `{key}`")))?;
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(line))?;
            if k != key {
                return Err(bad(&format!("expected `{key}`, found `{k}`")));
            }
            Ok(v.trim().to_string())
        };
        let num = |v: String| v.parse::<f64>().map_err(|_| bad(&v));
        let int = |v: String| v.parse::<usize>().map_err(|_| bad(&v));
        let n_elements = int(header("n_elements")?)?;
        let size = int(header("size")?)?;
        let tau = num(header("tau")?)?;
        let residual = num(header("residual")?)?;
        let n_t = int(header("n_t")?)?;
        let terms = header("terms")?.parse()?;
        let hash = header("hash").unwrap_or_default();
        let mut elements = Vec::with_capacity(size);
        let mut weights = Vec::with_capacity(size);
        for line in lines {
            let (e, w) = line.split_once(' ').ok_or_else(|| bad(line))?;
            elements.push(int(e.to_string())?);
            weights.push(num(w.trim().to_string())?);
        }
        if elements.len() != size {
            return Err(bad(&format!(
                "header says {size} elements, found {}",
                elements.len()
            )));
        }
        let mesh = Self {
            n_elements,
            elements,
            weights,
            tau,
            residual,
            provenance: Provenance { n_t, terms, hash },
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReducedMesh {
        ReducedMesh {
            n_elements: 10,
            elements: vec![1, 4, 9],
            weights: vec![0.1 + 0.2, 3.0_f64.sqrt(), 1e-300],
            tau: 0.01,
            residual: 0.009_876_543_210_123_4,
            provenance: Provenance {
                n_t: 200,
                terms: TermSelection::default(),
                hash: "abc123".into(),
            },
        }
    }

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let m = sample();
        let back = ReducedMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights.iter().zip(&m.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_bad_weights_and_order() {
        let mut m = sample();
        m.weights[1] = 0.0;
        assert!(ReducedMesh::from_text(&m.to_text()).is_err());
        let mut m = sample();
        m.elements = vec![4, 1, 9];
        assert!(m.validate().is_err());
        let mut m = sample();
        m.elements.clear();
        m.weights.clear();
        assert!(matches!(m.validate(), Err(Error::EmptyReducedMesh)));
    }
}
