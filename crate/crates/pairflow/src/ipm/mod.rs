//! Barrier interior-point estimator for the signed rank-2 volume model.
//!
//! [`estimate`] minimizes the regularized masked-fit objective over the
//! factor pair subject to orthogonality, nonnegative mass, and nonnegative
//! reconstructed volume, by Newton iterations on the perturbed KKT system
//! with a decreasing barrier parameter.
//!
//! The regularization weight is named `lambda_reg` and the barrier parameter
//! `mu` throughout; they are distinct quantities.

mod objective;

pub mod kkt;

pub use kkt::{solve_kkt, KktSolution};
pub use objective::{
    constraint_jacobians, eval_constraints, eval_hessian, eval_jacobian, eval_objective, Rect,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{pair_count, FactorPair, PairGraph, VolumeMatrix};

/// Solver parameters. Defaults follow the artifact's standard schedule:
/// `lambda_reg = 0.5`, barrier from 1 down to 1e-9 by factors of 0.2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IpmConfig {
    /// Regularization weight on unlisted cells (must be >= 0).
    pub lambda_reg: f64,
    /// Initial barrier parameter (> 0).
    pub mu0: f64,
    /// Barrier reduction factor in (0, 1).
    pub sigma: f64,
    /// Terminal barrier parameter (> 0).
    pub mu_min: f64,
    /// KKT residual tolerance (scaled by max(1, ||grad f||_inf)).
    pub tol_kkt: f64,
    /// Orthogonality tolerance on |w1 . w2| at convergence.
    pub tol_orth: f64,
    /// Cap on barrier reductions.
    pub max_outer: usize,
    /// Cap on Newton steps per barrier value.
    pub max_newton: usize,
    /// Fraction-to-boundary parameter in (0, 1).
    pub ftb_tau: f64,
    /// Seed for the deterministic w2 initialization perturbation.
    pub seed: u64,
}

impl Default for IpmConfig {
    fn default() -> Self {
        IpmConfig {
            lambda_reg: 0.5,
            mu0: 1.0,
            sigma: 0.2,
            mu_min: 1e-9,
            tol_kkt: 1e-8,
            tol_orth: 1e-8,
            max_outer: 40,
            max_newton: 80,
            ftb_tau: 0.995,
            seed: 0,
        }
    }
}

impl IpmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.lambda_reg >= 0.0) {
            return bad("lambda_reg must be >= 0");
        }
        if !(self.mu0 > 0.0) {
            return bad("mu0 must be > 0");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if !(self.mu_min > 0.0) {
            return bad("mu_min must be > 0");
        }
        if !(self.tol_kkt > 0.0 && self.tol_orth > 0.0) {
            return bad("tolerances must be > 0");
        }
        if !(self.ftb_tau > 0.0 && self.ftb_tau < 1.0) {
            return bad("ftb_tau must lie in (0, 1)");
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return bad("iteration caps must be positive");
        }
        Ok(())
    }
}

/// Barrier iterate: primal factors, slacks, multipliers, barrier parameter.
///
/// Slacks and inequality multipliers stay strictly positive at every
/// accepted iterate; the slack vector has one entry per `w1 >= 0` constraint
/// followed by one per unordered off-diagonal pair constraint.
#[derive(Debug, Clone)]
pub struct IpmState {
    pub w: FactorPair,
    pub s: Vec<f64>,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub mu: f64,
}

impl IpmState {
    /// Initial interior iterate: `w1` from normalized volume row sums
    /// (a gravity-consistent start), `w2` a small seeded perturbation
    /// orthogonalized against `w1`, slacks clipped away from zero, and
    /// multipliers on the central path for `mu0`.
    pub fn initial(v: &VolumeMatrix, cfg: &IpmConfig) -> IpmState {
        let n = v.n();
        let mut row_sums = vec![0.0; n];
        let mut total = 0.0;
        for i in 0..n {
            row_sums[i] = v.matrix().row_sum(i);
            total += row_sums[i];
        }
        let mut w1 = vec![0.0; n];
        if total > 0.0 {
            let u: Vec<f64> = row_sums.iter().map(|r| (r / total).sqrt()).collect();
            let u_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let c = v.matrix().frobenius_norm().sqrt() / u_norm;
            for i in 0..n {
                w1[i] = c * u[i];
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let w1_norm_sq: f64 = w1.iter().map(|x| x * x).sum();
        let scale = (w1_norm_sq / n as f64).sqrt();
        let mut w2: Vec<f64> = (0..n).map(|_| 1e-3 * scale * rng.gen_range(-1.0..1.0)).collect();
        if w1_norm_sq > 0.0 {
            let dot: f64 = w2.iter().zip(&w1).map(|(a, b)| a * b).sum();
            for i in 0..n {
                w2[i] -= dot / w1_norm_sq * w1[i];
            }
        }

        let w = FactorPair { w1, w2 };
        let (_, h) = eval_constraints(&w);
        let s: Vec<f64> = h.iter().map(|&x| (-x).max(1e-2)).collect();
        let beta: Vec<f64> = s.iter().map(|&x| cfg.mu0 / x).collect();
        IpmState { w, s, alpha: 0.0, beta, mu: cfg.mu0 }
    }
}

/// One accepted Newton step, for post-run inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub mu: f64,
    pub objective: f64,
    pub residual: f64,
}

/// Outcome of [`estimate`].
///
/// `final_kkt_residual` is the scaled KKT residual at `mu = 0` measured on
/// the internally normalized problem, before the final exact feasibility
/// projection; `final_orth` and `objective` are in original volume units
/// after it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IpmReport {
    pub converged: bool,
    pub outer_iters: usize,
    pub newton_iters: usize,
    pub final_kkt_residual: f64,
    pub final_orth: f64,
    pub objective: f64,
    /// Largest Hessian regularization shift applied during the run.
    pub max_hessian_shift: f64,
    pub history: Vec<IterRecord>,
}

/// Scaled max-norm of the perturbed KKT residual at the given barrier value.
pub fn kkt_error(
    state: &IpmState,
    v: &VolumeMatrix,
    g: &PairGraph,
    lambda_reg: f64,
    mu: f64,
) -> Result<f64> {
    let grad = eval_jacobian(&state.w, v, g, lambda_reg)?;
    let (g_eq, h) = eval_constraints(&state.w);
    let (jg, jh) = constraint_jacobians(&state.w);
    let jhb = jh.transpose_apply(&state.beta);

    let mut err = 0.0f64;
    for k in 0..grad.len() {
        err = err.max((grad[k] + state.alpha * jg[k] + jhb[k]).abs());
    }
    for p in 0..state.s.len() {
        err = err.max((state.s[p] * state.beta[p] - mu).abs());
        err = err.max((h[p] + state.s[p]).abs());
    }
    err = err.max(g_eq.abs());
    let sd = grad.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    Ok(err / sd)
}

/// Objective scale factor: the model is invariant under `V -> V / c`,
/// `w -> w / sqrt(c)`, so the solver runs on unit-scale data.
fn normalization(v: &VolumeMatrix) -> f64 {
    let c = v.matrix().max_abs();
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

struct MeritFn<'a> {
    v: &'a VolumeMatrix,
    g: &'a PairGraph,
    lambda_reg: f64,
    mu: f64,
    nu: f64,
}

impl MeritFn<'_> {
    /// l1 exact-penalty merit: objective, barrier term, and constraint
    /// violation weighted by `nu`.
    fn eval(&self, w: &FactorPair, s: &[f64]) -> f64 {
        let f = eval_objective(w, self.v, self.g, self.lambda_reg).expect("checked inputs");
        let barrier: f64 = s.iter().map(|x| x.ln()).sum();
        let (g_eq, h) = eval_constraints(w);
        let viol: f64 =
            g_eq.abs() + h.iter().zip(s).map(|(hi, si)| (hi + si).abs()).sum::<f64>();
        f - self.mu * barrier + self.nu * viol
    }
}

/// Largest step in `[0, 1]` keeping `x + t d >= (1 - tau) x` elementwise.
fn fraction_to_boundary(x: &[f64], d: &[f64], tau: f64) -> f64 {
    let mut t = 1.0f64;
    for (xi, di) in x.iter().zip(d) {
        if *di < 0.0 {
            t = t.min(-tau * xi / di);
        }
    }
    t
}

const DAMP_MIN: f64 = 1e-8;
const DAMP_GROWTH: f64 = 10.0;
const DAMP_DECAY: f64 = 5.0;

/// Estimates the factor pair for observed volumes `v` with listed-pair mask
/// `g`, returning the factors and a convergence report.
///
/// The mask must cover the support of `v` (every positive cell listed).
/// Non-convergence within the iteration caps returns the best iterate with
/// `converged = false` rather than an error. Deterministic for fixed inputs
/// and `cfg.seed`.
pub fn estimate(
    v: &VolumeMatrix,
    g: &PairGraph,
    cfg: &IpmConfig,
) -> Result<(FactorPair, IpmReport)> {
    cfg.validate()?;
    let n = v.n();
    if n < 2 {
        return Err(Error::InvalidProblem(format!(
            "estimation needs at least 2 assets, got {n}"
        )));
    }
    if g.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "volumes have {n} assets but mask has {}",
            g.n()
        )));
    }
    // Support consistency is also what eval_objective checks; fail fast here.
    let _ = eval_objective(&FactorPair::zeros(n), v, g, cfg.lambda_reg)?;

    let c = normalization(v);
    let vn = VolumeMatrix::new(v.matrix().scale(1.0 / c))?;
    let lam = cfg.lambda_reg;

    let mut state = IpmState::initial(&vn, cfg);
    let m = n + pair_count(n);
    debug_assert_eq!(state.s.len(), m);

    let mut history = Vec::new();
    let mut damping = 0.0f64;
    let mut max_shift = 0.0f64;
    let mut newton_iters = 0usize;
    let mut outer_iters = 0usize;
    let mut converged = false;

    'outer: loop {
        outer_iters += 1;
        let mu = state.mu;
        let mut rejects = 0usize;
        for _ in 0..cfg.max_newton {
            let e_mu = kkt_error(&state, &vn, g, lam, mu)?;
            if e_mu <= f64::max(cfg.tol_kkt, 0.1 * mu) {
                break;
            }
            let sol = match solve_kkt(&state, &vn, g, lam, damping) {
                Ok(sol) => sol,
                Err(_) => break, // let the barrier schedule move on
            };
            max_shift = max_shift.max(sol.shift);

            let ap = fraction_to_boundary(&state.s, &sol.ds, cfg.ftb_tau);
            let ad = fraction_to_boundary(&state.beta, &sol.dbeta, cfg.ftb_tau);

            // Penalty weight from the trial multiplier estimates.
            let alpha_trial = state.alpha + sol.dalpha;
            let beta_max_trial = state
                .beta
                .iter()
                .zip(&sol.dbeta)
                .map(|(b, db)| (b + db).abs())
                .fold(0.0f64, f64::max);
            let nu = 2.0 * 1.0f64.max(alpha_trial.abs()).max(beta_max_trial);
            let merit = MeritFn { v: &vn, g, lambda_reg: lam, mu, nu };
            let m0 = merit.eval(&state.w, &state.s);

            let mut t = ap;
            let mut accepted = false;
            let mut halvings = 0usize;
            for _ in 0..30 {
                let mut wt = state.w.clone();
                for i in 0..n {
                    wt.w1[i] += t * sol.dw[i];
                    wt.w2[i] += t * sol.dw[n + i];
                }
                let st: Vec<f64> =
                    state.s.iter().zip(&sol.ds).map(|(s, d)| s + t * d).collect();
                if st.iter().all(|&x| x > 0.0) && merit.eval(&wt, &st) < m0 {
                    state.w = wt;
                    state.s = st;
                    accepted = true;
                    break;
                }
                t *= 0.5;
                halvings += 1;
            }

            if accepted {
                state.alpha += ad * sol.dalpha;
                for (b, db) in state.beta.iter_mut().zip(&sol.dbeta) {
                    *b = (*b + ad * db).max(1e-300);
                }
                newton_iters += 1;
                rejects = 0;
                let obj = eval_objective(&state.w, &vn, g, lam)? * c * c;
                history.push(IterRecord { mu, objective: obj, residual: e_mu });
            } else {
                rejects += 1;
            }

            // Adapt the Levenberg damping to the line-search outcome.
            if halvings == 0 {
                damping = if damping <= DAMP_MIN { 0.0 } else { damping / DAMP_DECAY };
            } else if halvings >= 3 {
                damping = (damping * DAMP_GROWTH).max(DAMP_MIN);
            }
            if rejects >= 3 {
                break; // stuck at this barrier value; reduce mu
            }
        }

        let e0 = kkt_error(&state, &vn, g, lam, 0.0)?;
        if e0 <= cfg.tol_kkt {
            converged = true;
            break 'outer;
        }
        if state.mu <= cfg.mu_min || outer_iters >= cfg.max_outer {
            break 'outer;
        }
        state.mu = (state.mu * cfg.sigma).max(cfg.mu_min);
    }

    let final_kkt_residual = kkt_error(&state, &vn, g, lam, 0.0)?;

    // Exact feasibility restoration: project w2 orthogonal to w1 and clear
    // roundoff-negative masses. Both changes are O(tolerance).
    let mut w = state.w.clone();
    let w1_norm_sq: f64 = w.w1.iter().map(|x| x * x).sum();
    if w1_norm_sq > 0.0 {
        let dot = w.orthogonality();
        for i in 0..n {
            w.w2[i] -= dot / w1_norm_sq * w.w1[i];
        }
    }
    for x in w.w1.iter_mut() {
        if *x < 0.0 {
            debug_assert!(*x > -1e-6, "mass went visibly negative: {x}");
            *x = 0.0;
        }
    }

    // Back to original volume units.
    let sqrt_c = c.sqrt();
    for i in 0..n {
        w.w1[i] *= sqrt_c;
        w.w2[i] *= sqrt_c;
    }
    let final_orth = w.orthogonality().abs();
    let objective = eval_objective(&w, v, g, lam)?;
    let converged = converged && final_orth <= cfg.tol_orth;

    let report = IpmReport {
        converged,
        outer_iters,
        newton_iters,
        final_kkt_residual,
        final_orth,
        objective,
        max_hessian_shift: max_shift,
        history,
    };
    Ok((w, report))
}
