//! Assembly and solution of the Newton step on the perturbed KKT conditions.
//!
//! The system is the symmetric saddle-point form
//!
//! ```text
//! [ H_L        0      jg   Jh^T ] [ dw ]   [ -(grad f + alpha jg + Jh^T beta) ]
//! [ 0          Sigma  0    I    ] [ ds ] = [ -(beta - mu / s)                 ]
//! [ jg^T       0      0    0    ] [ da ]   [ -g                               ]
//! [ Jh         I      0    0    ] [ db ]   [ -(h + s)                         ]
//! ```
//!
//! with `Sigma = diag(beta_i / s_i)` (the complementarity equation
//! `S beta = mu 1` linearized in `(s, beta)` and scaled by `S^{-1}`), and
//! `H_L` the Lagrangian Hessian: the objective Hessian plus the curvature of
//! the bilinear orthogonality constraint and of the quadratic pair
//! constraints weighted by their multipliers.
//!
//! The matrix is factored by pivoted LDL^T. When the factorization fails or
//! the inertia is not `(2n + m, m + 1)` the Hessian block receives a shift
//! `delta * I` escalating tenfold from 1e-8; a matching negative shift goes
//! on the equality-multiplier diagonal once primal shifts alone stop helping
//! (the equality row is identically zero at w = 0). Solutions are polished by
//! iterative refinement against the matrix actually factored.

use crate::error::{Error, Result};
use crate::linalg::{sym_matvec, Ldlt};
use crate::matcore::{pair_count, PairGraph, SymMatrix, VolumeMatrix};

use super::objective::{constraint_jacobians, eval_constraints, eval_hessian, eval_jacobian};
use super::IpmState;

/// Newton direction for one interior-point iteration.
#[derive(Debug, Clone)]
pub struct KktSolution {
    pub dw: Vec<f64>,
    pub ds: Vec<f64>,
    pub dalpha: f64,
    pub dbeta: Vec<f64>,
    /// Regularization shift applied to the Hessian block (0 when none).
    pub shift: f64,
    /// Negative shift applied to the equality-multiplier diagonal (0 normally).
    pub dual_shift: f64,
    /// Relative residual of the factored linear system after refinement.
    pub rel_residual: f64,
}

/// Builds the full symmetric KKT block matrix at the given state.
///
/// `hessian_shift` is added to the `2n x 2n` Hessian block diagonal and
/// `dual_shift` is subtracted from the equality-multiplier diagonal entry.
pub fn assemble_kkt_matrix(
    state: &IpmState,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
    hessian_shift: f64,
    dual_shift: f64,
) -> Result<SymMatrix> {
    let n = state.w.n();
    let nw = 2 * n;
    let m = n + pair_count(n);
    let dim = nw + m + 1 + m;

    let mut hl = eval_hessian(&state.w, v, g, lambda_reg)?;
    // Curvature of g(W) = w1 . w2.
    for i in 0..n {
        hl.set(i, n + i, hl.get(i, n + i) + state.alpha);
    }
    // Curvature of the pair constraints h2_(i,j) = -(w1_i w1_j - w2_i w2_j).
    let mut row = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let b = state.beta[row];
            hl.set(i, j, hl.get(i, j) - b);
            hl.set(n + i, n + j, hl.get(n + i, n + j) + b);
            row += 1;
        }
    }

    let (jg, jh) = constraint_jacobians(&state.w);

    let mut k = SymMatrix::zeros(dim);
    for r in 0..nw {
        for c in r..nw {
            let mut val = hl.get(r, c);
            if r == c {
                val += hessian_shift;
            }
            k.set(r, c, val);
        }
    }
    let s_off = nw;
    let a_off = nw + m;
    let b_off = nw + m + 1;
    for p in 0..m {
        k.set(s_off + p, s_off + p, state.beta[p] / state.s[p]);
        k.set(s_off + p, b_off + p, 1.0);
    }
    for c in 0..nw {
        k.set(a_off, c, jg[c]);
    }
    k.set(a_off, a_off, -dual_shift);
    for p in 0..m {
        for c in 0..nw {
            k.set(b_off + p, c, jh.get(p, c));
        }
    }
    Ok(k)
}

/// Right-hand side of the Newton system at the given state.
pub fn kkt_rhs(
    state: &IpmState,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
) -> Result<Vec<f64>> {
    let n = state.w.n();
    let nw = 2 * n;
    let m = n + pair_count(n);
    let grad = eval_jacobian(&state.w, v, g, lambda_reg)?;
    let (g_eq, h) = eval_constraints(&state.w);
    let (jg, jh) = constraint_jacobians(&state.w);
    let jhb = jh.transpose_apply(&state.beta);

    let mut rhs = vec![0.0; nw + m + 1 + m];
    for c in 0..nw {
        rhs[c] = -(grad[c] + state.alpha * jg[c] + jhb[c]);
    }
    for p in 0..m {
        rhs[nw + p] = state.mu / state.s[p] - state.beta[p];
    }
    rhs[nw + m] = -g_eq;
    for p in 0..m {
        rhs[nw + m + 1 + p] = -(h[p] + state.s[p]);
    }
    Ok(rhs)
}

const SHIFT_START: f64 = 1e-8;
const SHIFT_GROWTH: f64 = 10.0;
const MAX_SHIFT_TRIES: usize = 24;

/// Solves the Newton system at `state`, regularizing as needed.
///
/// `base_shift` is a caller-maintained damping floor added to the Hessian
/// block before any escalation (the solver uses it to shorten steps on
/// ill-conditioned iterates); pass 0 for the plain Newton direction.
pub fn solve_kkt(
    state: &IpmState,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
    base_shift: f64,
) -> Result<KktSolution> {
    let n = state.w.n();
    let nw = 2 * n;
    let m = n + pair_count(n);
    let dim = nw + m + 1 + m;

    let rhs = kkt_rhs(state, v, g, lambda_reg)?;
    let (jg, _) = constraint_jacobians(&state.w);
    let jg_zero = jg.iter().all(|&x| x == 0.0);

    let mut shift = base_shift;
    let mut tries = 0;
    loop {
        // The equality row vanishes identically at w = 0; only a dual shift
        // restores invertibility there.
        let dual_shift = if jg_zero || tries > 2 { shift.max(SHIFT_START) } else { 0.0 };
        let k = assemble_kkt_matrix(state, v, g, lambda_reg, shift, dual_shift)?;
        if let Some(f) = Ldlt::factor(&k) {
            if f.inertia() == (nw + m, m + 1) {
                let mut x = f.solve(&rhs);
                // Iterative refinement against the factored matrix.
                let rhs_norm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
                let mut rel = f64::INFINITY;
                for _ in 0..3 {
                    let kx = sym_matvec(&k, &x);
                    let res: Vec<f64> = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
                    rel = res.iter().fold(0.0f64, |a, v| a.max(v.abs())) / rhs_norm;
                    if rel <= 1e-12 {
                        break;
                    }
                    let dx = f.solve(&res);
                    for i in 0..dim {
                        x[i] += dx[i];
                    }
                }
                if rel.is_finite() {
                    return Ok(KktSolution {
                        dw: x[..nw].to_vec(),
                        ds: x[nw..nw + m].to_vec(),
                        dalpha: x[nw + m],
                        dbeta: x[nw + m + 1..].to_vec(),
                        shift,
                        dual_shift,
                        rel_residual: rel,
                    });
                }
            }
        }
        tries += 1;
        if tries > MAX_SHIFT_TRIES {
            return Err(Error::DegenerateSystem { shift });
        }
        shift = if shift <= 0.0 { SHIFT_START } else { shift * SHIFT_GROWTH };
    }
}
