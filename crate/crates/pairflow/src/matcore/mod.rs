//! Core dense symmetric-matrix, factor-model and pair-graph types shared by
//! every other module.
//!
//! All values here are immutable after construction and safe to share across
//! threads. Matrices are stored dense; the asset universes this crate targets
//! are small (tens to low hundreds of symbols).

mod factors;
mod graph;
mod matrix;
mod symbols;

pub use factors::{covered_volume, masked_sq_frobenius, reconstruct_k, FactorPair};
pub use graph::{DisjointSet, PairGraph};
pub use matrix::{SymMatrix, VolumeMatrix};
pub use symbols::SymbolTable;

/// Number of unordered pairs over `n` assets.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Linear index of the unordered pair `(i, j)`, `i < j`, in row-major
/// upper-triangle order. This ordering is shared by the estimator's
/// constraint vector and the search's edge assignment.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`]: the `(i, j)` pair at linear position `p`.
pub fn pair_at(n: usize, p: usize) -> (usize, usize) {
    debug_assert!(p < pair_count(n));
    let mut i = 0;
    let mut offset = 0;
    while offset + (n - i - 1) <= p {
        offset += n - i - 1;
        i += 1;
    }
    (i, i + 1 + (p - offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indexing_round_trips() {
        for n in 1..8 {
            let mut seen = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = pair_index(n, i, j);
                    assert_eq!(seen, p);
                    assert_eq!(pair_at(n, p), (i, j));
                    seen += 1;
                }
            }
            assert_eq!(seen, pair_count(n));
        }
    }
}
