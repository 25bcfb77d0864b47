use serde::{Deserialize, Serialize};

use super::{PairGraph, SymMatrix};
use crate::error::{Error, Result};

/// The signed rank-2 factor pair behind the latent volume model
/// `K* = w1 w1' - w2 w2'`.
///
/// `w1` carries the per-asset "mass" (nonnegative at a converged solution);
/// `w2` is the signed correction whose same-sign products depress pairwise
/// volume. At solver convergence `w1 . w2` is orthogonal to tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl FactorPair {
    pub fn new(w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if w1.len() != w2.len() {
            return Err(Error::DimensionMismatch(format!(
                "factor lengths differ: {} vs {}",
                w1.len(),
                w2.len()
            )));
        }
        Ok(FactorPair { w1, w2 })
    }

    pub fn zeros(n: usize) -> Self {
        FactorPair { w1: vec![0.0; n], w2: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.w1.len()
    }

    /// The inner product `w1 . w2` (zero at an exactly orthogonal pair).
    pub fn orthogonality(&self) -> f64 {
        self.w1.iter().zip(&self.w2).map(|(a, b)| a * b).sum()
    }
}

/// Evaluates `K*[i][j] = w1[i] w1[j] - w2[i] w2[j]` for all `i != j`; the
/// diagonal is set to 0 (self-pairs do not exist).
pub fn reconstruct_k(factors: &FactorPair) -> Result<SymMatrix> {
    let n = factors.n();
    if n < 2 {
        return Err(Error::InvalidProblem(format!(
            "need at least 2 assets to reconstruct, got {n}"
        )));
    }
    let mut k = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            k.set(
                i,
                j,
                factors.w1[i] * factors.w1[j] - factors.w2[i] * factors.w2[j],
            );
        }
    }
    Ok(k)
}

/// Squared Frobenius norm of `a` restricted to the mask's edges, counting
/// each unordered pair twice (full symmetric sum) and excluding the diagonal.
pub fn masked_sq_frobenius(a: &SymMatrix, mask: &PairGraph) -> Result<f64> {
    if a.n() != mask.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but mask has {} vertices",
            a.n(),
            a.n(),
            mask.n()
        )));
    }
    let mut sum = 0.0;
    for i in 0..a.n() {
        for j in (i + 1)..a.n() {
            if mask.has_edge(i, j) {
                let v = a.get(i, j);
                sum += 2.0 * v * v;
            }
        }
    }
    Ok(sum)
}

/// Volume carried directly by the graph: sum of `k_star[i][j]` over the
/// strict upper triangle where `g` has an edge (each unordered pair once).
pub fn covered_volume(k_star: &SymMatrix, g: &PairGraph) -> Result<f64> {
    if k_star.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but graph has {} vertices",
            k_star.n(),
            k_star.n(),
            g.n()
        )));
    }
    let mut sum = 0.0;
    for i in 0..k_star.n() {
        for j in (i + 1)..k_star.n() {
            if g.has_edge(i, j) {
                sum += k_star.get(i, j);
            }
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors(w1: &[f64], w2: &[f64]) -> FactorPair {
        FactorPair::new(w1.to_vec(), w2.to_vec()).unwrap()
    }

    #[test]
    fn reconstruct_zero_second_factor() {
        let k = reconstruct_k(&factors(&[1.0, 2.0], &[0.0, 0.0])).unwrap();
        assert_eq!(k.get(0, 1), 2.0);
        assert_eq!(k.get(0, 0), 0.0);
        assert_eq!(k.get(1, 1), 0.0);
    }

    #[test]
    fn reconstruct_pure_repulsion() {
        let k = reconstruct_k(&factors(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        assert_eq!(k.get(0, 1), -1.0);
    }

    #[test]
    fn reconstruct_three_assets_by_hand() {
        // Direct evaluation of the two outer products:
        // K[0][1] = 2*1 - 0.5*(-0.5) = 2.25, K[0][2] = 2 - 0 = 2, K[1][2] = 1 - 0 = 1.
        let k = reconstruct_k(&factors(&[2.0, 1.0, 1.0], &[0.5, -0.5, 0.0])).unwrap();
        assert_eq!(k.get(0, 1), 2.25);
        assert_eq!(k.get(0, 2), 2.0);
        assert_eq!(k.get(1, 2), 1.0);
    }

    #[test]
    fn reconstruct_rejects_tiny_problem() {
        assert!(reconstruct_k(&factors(&[1.0], &[0.0])).is_err());
    }

    #[test]
    fn reconstruct_is_bitwise_symmetric() {
        let k = reconstruct_k(&factors(&[1.1, -0.3, 2.7, 0.2], &[0.4, 1.9, -0.8, 0.05])).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.get(i, j).to_bits(), k.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn masked_frobenius_counts_both_symmetric_cells() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 1, 1.0);
        assert_eq!(masked_sq_frobenius(&a, &PairGraph::complete(2)).unwrap(), 2.0);
    }

    #[test]
    fn masked_frobenius_empty_mask_is_zero() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 1, 7.0);
        a.set(1, 2, -2.0);
        assert_eq!(masked_sq_frobenius(&a, &PairGraph::empty(3)).unwrap(), 0.0);
    }

    #[test]
    fn masked_frobenius_single_cell() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 1, 3.0);
        assert_eq!(masked_sq_frobenius(&a, &PairGraph::complete(3)).unwrap(), 18.0);
    }

    #[test]
    fn masked_frobenius_complete_equals_full_offdiagonal_norm() {
        let mut a = SymMatrix::zeros(4);
        let vals = [(0, 1, 1.5), (0, 2, -2.0), (0, 3, 0.25), (1, 2, 3.0), (1, 3, -1.0), (2, 3, 0.5)];
        let mut expect = 0.0;
        for (i, j, v) in vals {
            a.set(i, j, v);
            expect += 2.0 * v * v;
        }
        assert_eq!(masked_sq_frobenius(&a, &PairGraph::complete(4)).unwrap(), expect);
    }

    #[test]
    fn covered_volume_examples() {
        let mut k = SymMatrix::zeros(3);
        k.set(0, 1, 5.0);
        k.set(0, 2, 3.0);
        k.set(1, 2, 4.0);
        assert_eq!(covered_volume(&k, &PairGraph::complete(3)).unwrap(), 12.0);
        assert_eq!(covered_volume(&k, &PairGraph::empty(3)).unwrap(), 0.0);
        let path = PairGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(covered_volume(&k, &path).unwrap(), 9.0);
    }

    #[test]
    fn covered_volume_additive_over_disjoint_edge_sets() {
        let mut k = SymMatrix::zeros(4);
        k.set(0, 1, 2.0);
        k.set(2, 3, 7.0);
        k.set(0, 3, 1.0);
        let a = PairGraph::from_edges(4, &[(0, 1)]);
        let b = PairGraph::from_edges(4, &[(2, 3), (0, 3)]);
        let both = PairGraph::from_edges(4, &[(0, 1), (2, 3), (0, 3)]);
        let ca = covered_volume(&k, &a).unwrap();
        let cb = covered_volume(&k, &b).unwrap();
        assert_eq!(ca + cb, covered_volume(&k, &both).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = SymMatrix::zeros(3);
        assert!(covered_volume(&k, &PairGraph::empty(4)).is_err());
        assert!(masked_sq_frobenius(&k, &PairGraph::empty(2)).is_err());
    }
}
