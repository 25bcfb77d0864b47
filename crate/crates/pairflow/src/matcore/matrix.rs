use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric `n x n` matrix of `f64`, full row-major storage.
///
/// Symmetry is enforced by construction: all writes go through
/// [`SymMatrix::set`], which mirrors the cell across the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Builds from a full row-major slice, verifying symmetry.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        let m = SymMatrix { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                if m.get(i, j).to_bits() != m.get(j, i).to_bits() {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Sum of row `i`, diagonal included (the diagonal is 0 for all
    /// matrices this crate builds).
    pub fn row_sum(&self, i: usize) -> f64 {
        self.data[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Frobenius norm over the full matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Sum over the strict upper triangle (each unordered pair once).
    pub fn upper_triangle_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                s += self.get(i, j);
            }
        }
        s
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Observed trading volumes: symmetric, nonnegative, zero diagonal.
///
/// The implied mask (cells with positive volume) is the graph of listed
/// pairs; unlisted pairs hold exact zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMatrix {
    values: SymMatrix,
}

impl VolumeMatrix {
    /// Validates the volume-matrix invariants on top of symmetry.
    pub fn new(values: SymMatrix) -> Result<Self> {
        let n = values.n();
        for i in 0..n {
            if values.get(i, i) != 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "volume matrix diagonal must be zero (found {} at {i})",
                    values.get(i, i)
                )));
            }
            for j in (i + 1)..n {
                let v = values.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidProblem(format!(
                        "volume must be finite and nonnegative, found {v} at ({i},{j})"
                    )));
                }
            }
        }
        Ok(VolumeMatrix { values })
    }

    pub fn zeros(n: usize) -> Self {
        VolumeMatrix { values: SymMatrix::zeros(n) }
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.values
    }

    /// Total volume counting each unordered pair once.
    pub fn total(&self) -> f64 {
        self.values.upper_triangle_sum()
    }

    /// The graph of pairs with positive observed volume.
    pub fn support_graph(&self) -> super::PairGraph {
        let n = self.n();
        let mut g = super::PairGraph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.get(i, j) > 0.0 {
                    g.set_edge(i, j, true);
                }
            }
        }
        g
    }
}
