//! Dense symmetric-indefinite factorization.
//!
//! The estimator's Newton system is a symmetric saddle-point matrix, so plain
//! Cholesky does not apply. This module implements the Bunch-Kaufman LDL^T
//! factorization with 1x1/2x2 pivot blocks and symmetric interchanges, which
//! also yields the matrix inertia (used by the solver to decide when the
//! Hessian block needs a regularization shift).

use crate::matcore::SymMatrix;

const BK_ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

#[derive(Debug, Clone, Copy)]
enum Pivot {
    /// 1x1 block starting at this position.
    One { d: f64 },
    /// 2x2 block [[a, b], [b, c]] spanning this position and the next.
    Two { a: f64, b: f64, c: f64 },
}

/// Factorization P A P^T = L D L^T of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// Unit lower-triangular factor, full row-major storage.
    l: Vec<f64>,
    /// D blocks in order; a Two block consumes two positions.
    pivots: Vec<(usize, Pivot)>,
    /// perm[k] = original row appearing at pivoted position k.
    perm: Vec<usize>,
    n_pos: usize,
    n_neg: usize,
}

impl Ldlt {
    /// Factors `a`; returns `None` when a pivot is numerically zero
    /// (singular matrix at working precision).
    pub fn factor(a: &SymMatrix) -> Option<Ldlt> {
        let n = a.n();
        let mut w = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = a.get(i, j);
            }
        }
        let zero_tol = {
            let amax = a.max_abs();
            if amax == 0.0 {
                return None;
            }
            f64::EPSILON * amax * (n as f64)
        };

        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            l[i * n + i] = 1.0;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let (mut n_pos, mut n_neg) = (0usize, 0usize);

        let idx = |i: usize, j: usize| i * n + j;
        let swap_sym = |w: &mut Vec<f64>, l: &mut Vec<f64>, perm: &mut Vec<usize>, p: usize, q: usize, k: usize| {
            if p == q {
                return;
            }
            for j in 0..n {
                w.swap(idx(p, j), idx(q, j));
            }
            for i in 0..n {
                w.swap(idx(i, p), idx(i, q));
            }
            // Only columns < k of L are populated so far.
            for j in 0..k {
                l.swap(idx(p, j), idx(q, j));
            }
            perm.swap(p, q);
        };

        let mut k = 0;
        while k < n {
            let absakk = w[idx(k, k)].abs();
            // Largest off-diagonal magnitude in column k below the diagonal.
            let (mut r, mut colmax) = (k, 0.0f64);
            for i in (k + 1)..n {
                let v = w[idx(i, k)].abs();
                if v > colmax {
                    colmax = v;
                    r = i;
                }
            }

            let use_two;
            let mut swap_with = None;
            if absakk.max(colmax) <= zero_tol {
                return None;
            } else if absakk >= BK_ALPHA * colmax {
                use_two = false;
            } else {
                // Largest magnitude in row r of the remaining block, excluding (r, k).
                let mut rowmax = 0.0f64;
                for i in k..n {
                    if i != r {
                        rowmax = rowmax.max(w[idx(r, i)].abs());
                    }
                }
                if absakk * rowmax >= BK_ALPHA * colmax * colmax {
                    use_two = false;
                } else if w[idx(r, r)].abs() >= BK_ALPHA * rowmax {
                    use_two = false;
                    swap_with = Some((k, r));
                } else {
                    use_two = true;
                    swap_with = Some((k + 1, r));
                }
            }
            if let Some((p, q)) = swap_with {
                swap_sym(&mut w, &mut l, &mut perm, p, q, k);
            }

            if !use_two {
                let d = w[idx(k, k)];
                if d.abs() <= zero_tol {
                    return None;
                }
                if d > 0.0 {
                    n_pos += 1;
                } else {
                    n_neg += 1;
                }
                for i in (k + 1)..n {
                    l[idx(i, k)] = w[idx(i, k)] / d;
                }
                for i in (k + 1)..n {
                    let lik = l[idx(i, k)];
                    if lik != 0.0 {
                        for j in (k + 1)..=i {
                            w[idx(i, j)] -= lik * w[idx(j, k)];
                        }
                    }
                }
                // Mirror the updated lower triangle.
                for i in (k + 1)..n {
                    for j in (k + 1)..i {
                        w[idx(j, i)] = w[idx(i, j)];
                    }
                }
                pivots.push((k, Pivot::One { d }));
                k += 1;
            } else {
                let a2 = w[idx(k, k)];
                let b2 = w[idx(k + 1, k)];
                let c2 = w[idx(k + 1, k + 1)];
                let det = a2 * c2 - b2 * b2;
                if det.abs() <= zero_tol * zero_tol {
                    return None;
                }
                // A Bunch-Kaufman 2x2 pivot always carries one positive and
                // one negative eigenvalue (its determinant is negative).
                n_pos += 1;
                n_neg += 1;
                for i in (k + 2)..n {
                    let u = w[idx(i, k)];
                    let v = w[idx(i, k + 1)];
                    l[idx(i, k)] = (c2 * u - b2 * v) / det;
                    l[idx(i, k + 1)] = (a2 * v - b2 * u) / det;
                }
                for i in (k + 2)..n {
                    let l1 = l[idx(i, k)];
                    let l2 = l[idx(i, k + 1)];
                    for j in (k + 2)..=i {
                        w[idx(i, j)] -= l1 * w[idx(j, k)] + l2 * w[idx(j, k + 1)];
                    }
                }
                for i in (k + 2)..n {
                    for j in (k + 2)..i {
                        w[idx(j, i)] = w[idx(i, j)];
                    }
                }
                pivots.push((k, Pivot::Two { a: a2, b: b2, c: c2 }));
                k += 2;
            }
        }

        Some(Ldlt { n, l, pivots, perm, n_pos, n_neg })
    }

    /// `(n_pos, n_neg)` eigenvalue sign counts; zero pivots abort the
    /// factorization instead of being counted.
    pub fn inertia(&self) -> (usize, usize) {
        (self.n_pos, self.n_neg)
    }

    /// Solves `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let idx = |i: usize, j: usize| i * n + j;

        // y = P b
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        // L z = y (unit lower)
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.l[idx(i, j)] * y[j];
            }
            y[i] = s;
        }
        // D u = z
        for &(k, piv) in &self.pivots {
            match piv {
                Pivot::One { d } => y[k] /= d,
                Pivot::Two { a, b, c } => {
                    let det = a * c - b * b;
                    let (z1, z2) = (y[k], y[k + 1]);
                    y[k] = (c * z1 - b * z2) / det;
                    y[k + 1] = (a * z2 - b * z1) / det;
                }
            }
        }
        // L^T v = u
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.l[idx(j, i)] * y[j];
            }
            y[i] = s;
        }
        // x = P^T v
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

/// Symmetric matrix-vector product `A x`.
pub fn sym_matvec(a: &SymMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.n();
    assert_eq!(x.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a.get(i, j) * x[j];
        }
        y[i] = s;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_residual(a: &SymMatrix, b: &[f64]) -> f64 {
        let f = Ldlt::factor(a).expect("factorizable");
        let x = f.solve(b);
        let ax = sym_matvec(a, &x);
        let num: f64 = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn identity_inertia_and_solve() {
        let mut a = SymMatrix::zeros(4);
        for i in 0..4 {
            a.set(i, i, 1.0);
        }
        let f = Ldlt::factor(&a).unwrap();
        assert_eq!(f.inertia(), (4, 0));
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn saddle_matrix_needs_two_by_two_pivot() {
        // [[0, 1], [1, 0]]: zero diagonal forces a 2x2 pivot; eigenvalues +-1.
        let mut a = SymMatrix::zeros(2);
        a.set(0, 1, 1.0);
        let f = Ldlt::factor(&a).unwrap();
        assert_eq!(f.inertia(), (1, 1));
        let x = f.solve(&[3.0, -5.0]);
        assert!((x[0] + 5.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 1, 1.0); // rows 0 and 1 identical, row 2 zero
        a.set(1, 0, 1.0);
        assert!(Ldlt::factor(&a).is_none());
    }

    #[test]
    fn inertia_matches_sylvester_congruence() {
        // A = M D M^T has the inertia of D for any nonsingular M.
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for trial in 0..50 {
            let n = 3 + (trial % 5);
            let d_signs: Vec<f64> = (0..n).map(|i| if (trial + i) % 3 == 0 { -1.0 } else { 1.0 }).collect();
            let want_neg = d_signs.iter().filter(|&&s| s < 0.0).count();
            let mut m = vec![0.0f64; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = 0.3 * rnd() + if i == j { 1.0 } else { 0.0 };
                }
            }
            let mut a = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += m[i * n + k] * d_signs[k] * (0.5 + (k as f64)) * m[j * n + k];
                    }
                    a.set(i, j, s);
                }
            }
            let f = Ldlt::factor(&a).unwrap();
            assert_eq!(f.inertia(), (n - want_neg, want_neg), "trial {trial}");
        }
    }

    #[test]
    fn random_indefinite_solves_accurately() {
        let mut state = 99u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for n in [5usize, 20, 60] {
            let mut a = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    a.set(i, j, rnd() * if (i + j) % 2 == 0 { 1.0 } else { 10.0 });
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
            assert!(solve_residual(&a, &b) < 1e-10, "n={n}");
        }
    }
}
