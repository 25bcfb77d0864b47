//! Objective, constraints, and their exact first/second derivatives.
//!
//! The estimator minimizes
//!
//! ```text
//! f(W) = sum_{i!=j} G_ij (K*_ij - V_ij)^2 + lambda sum_{i!=j} (1 - G_ij) K*_ij^2
//! ```
//!
//! over W = [w1; w2] with K* = w1 w1' - w2 w2', subject to w1'w2 = 0,
//! w1 >= 0 and K* >= 0 on off-diagonal cells. Constraints are stored in the
//! `h(W) <= 0` convention (`h1 = -w1`, `h2 = -K*`), so slack equations read
//! `h + s = 0` with `s >= 0`.
//!
//! Flattening order is `[w1[0..n]; w2[0..n]]`; inequality rows are the `n`
//! sign constraints followed by the `n(n-1)/2` pair constraints in row-major
//! upper-triangle order.

use crate::error::{Error, Result};
use crate::matcore::{pair_count, FactorPair, PairGraph, SymMatrix, VolumeMatrix};

/// Dense rectangular matrix, row-major. Holds the stacked constraint Jacobian.
#[derive(Debug, Clone)]
pub struct Rect {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Rect {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Rect { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `A^T y` for this matrix `A`.
    pub fn transpose_apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let yr = y[r];
            if yr != 0.0 {
                for c in 0..self.cols {
                    out[c] += self.get(r, c) * yr;
                }
            }
        }
        out
    }
}

fn check_inputs(w: &FactorPair, v: &VolumeMatrix, g: &PairGraph) -> Result<()> {
    let n = w.n();
    if v.n() != n || g.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "factors have {n} assets, volumes {} and mask {}",
            v.n(),
            g.n()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if v.get(i, j) > 0.0 && !g.has_edge(i, j) {
                return Err(Error::InconsistentInput(format!(
                    "volume {} observed at unlisted pair ({i},{j})",
                    v.get(i, j)
                )));
            }
        }
    }
    Ok(())
}

/// Per-cell weight: 1 on listed pairs, `lambda_reg` on unlisted ones.
#[inline]
fn cell_weight(g: &PairGraph, lambda_reg: f64, i: usize, j: usize) -> f64 {
    if g.has_edge(i, j) {
        1.0
    } else {
        lambda_reg
    }
}

/// Value of the regularized masked-fit objective.
pub fn eval_objective(
    w: &FactorPair,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
) -> Result<f64> {
    check_inputs(w, v, g)?;
    let n = w.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let k = w.w1[i] * w.w1[j] - w.w2[i] * w.w2[j];
            let r = k - v.get(i, j);
            sum += 2.0 * cell_weight(g, lambda_reg, i, j) * r * r;
        }
    }
    Ok(sum)
}

/// Equality and inequality constraint values: `g_eq = w1 . w2`,
/// `h = [-w1; -K* over upper-triangle pairs]`.
pub fn eval_constraints(w: &FactorPair) -> (f64, Vec<f64>) {
    let n = w.n();
    let g_eq = w.orthogonality();
    let mut h = Vec::with_capacity(n + pair_count(n));
    for i in 0..n {
        h.push(-w.w1[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            h.push(-(w.w1[i] * w.w1[j] - w.w2[i] * w.w2[j]));
        }
    }
    (g_eq, h)
}

/// Exact gradient of [`eval_objective`], flattened `[w1-block; w2-block]`.
pub fn eval_jacobian(
    w: &FactorPair,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
) -> Result<Vec<f64>> {
    check_inputs(w, v, g)?;
    let n = w.n();
    let mut grad = vec![0.0; 2 * n];
    for k in 0..n {
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let kv = w.w1[k] * w.w1[j] - w.w2[k] * w.w2[j];
            let cr = cell_weight(g, lambda_reg, k, j) * (kv - v.get(k, j));
            g1 += cr * w.w1[j];
            g2 += cr * w.w2[j];
        }
        grad[k] = 4.0 * g1;
        grad[n + k] = -4.0 * g2;
    }
    Ok(grad)
}

/// Exact Hessian of [`eval_objective`] as a symmetric `2n x 2n` matrix.
pub fn eval_hessian(
    w: &FactorPair,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
) -> Result<SymMatrix> {
    check_inputs(w, v, g)?;
    let n = w.n();
    let mut hess = SymMatrix::zeros(2 * n);
    // Diagonal accumulators: sum_j c_kj w1_j^2 etc.
    for k in 0..n {
        let mut d11 = 0.0;
        let mut d22 = 0.0;
        let mut d12 = 0.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let c = cell_weight(g, lambda_reg, k, j);
            d11 += c * w.w1[j] * w.w1[j];
            d22 += c * w.w2[j] * w.w2[j];
            d12 += c * w.w1[j] * w.w2[j];
        }
        hess.set(k, k, 4.0 * d11);
        hess.set(n + k, n + k, 4.0 * d22);
        hess.set(k, n + k, -4.0 * d12);
    }
    for k in 0..n {
        for m in (k + 1)..n {
            let c = cell_weight(g, lambda_reg, k, m);
            let kv = w.w1[k] * w.w1[m] - w.w2[k] * w.w2[m];
            let r = kv - v.get(k, m);
            hess.set(k, m, 4.0 * c * (w.w1[k] * w.w1[m] + r));
            hess.set(n + k, n + m, 4.0 * c * (w.w2[k] * w.w2[m] - r));
        }
    }
    // Mixed off-diagonal block is not symmetric within itself:
    // d2f / dw1_k dw2_m = -4 c_km w2_k w1_m for k != m.
    for k in 0..n {
        for m in 0..n {
            if m == k {
                continue;
            }
            let c = cell_weight(g, lambda_reg, k, m);
            hess.set(k, n + m, -4.0 * c * w.w2[k] * w.w1[m]);
        }
    }
    Ok(hess)
}

/// Gradients of the constraints: `jg` is the gradient of `w1 . w2`
/// (`[w2; w1]` in flattening order); `jh` stacks one row per inequality in
/// the sign convention of [`eval_constraints`].
pub fn constraint_jacobians(w: &FactorPair) -> (Vec<f64>, Rect) {
    let n = w.n();
    let mut jg = Vec::with_capacity(2 * n);
    jg.extend_from_slice(&w.w2);
    jg.extend_from_slice(&w.w1);

    let rows = n + pair_count(n);
    let mut jh = Rect::zeros(rows, 2 * n);
    for i in 0..n {
        jh.set(i, i, -1.0);
    }
    let mut r = n;
    for i in 0..n {
        for j in (i + 1)..n {
            jh.set(r, i, -w.w1[j]);
            jh.set(r, j, -w.w1[i]);
            jh.set(r, n + i, w.w2[j]);
            jh.set(r, n + j, w.w2[i]);
            r += 1;
        }
    }
    (jg, jh)
}
