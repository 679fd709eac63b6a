//! Full (unrestarted) right-preconditioned GMRES.

use num_complex::Complex64 as C64;

use super::{axpy, dot, norm2, scale};
use crate::error::{Error, Result};

/// A linear operator on complex vectors. Implemented by sparse matrices,
/// preconditioners, and test doubles.
pub trait LinOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Identity operator (unpreconditioned GMRES).
pub struct IdentityOp(pub usize);

impl LinOp for IdentityOp {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub solution: Vec<C64>,
    /// Krylov dimension at termination.
    pub iterations: usize,
    /// True relative residual `||b - A x|| / ||b||` of the returned solution.
    pub final_residual: f64,
    pub converged: bool,
    /// Recurrence (Givens) relative residuals, starting at 1 for the zero
    /// initial guess; monotone non-increasing.
    pub history: Vec<f64>,
}

/// Solve `A x = b` with full GMRES on the right-preconditioned system
/// `A M^{-1} y = b`, `x = M^{-1} y`, starting from the zero guess.
///
/// Terminates once the true relative residual `||b - A x|| / ||b||` drops to
/// `tol` (the Givens recurrence supplies the cheap estimate; the true
/// residual is verified before declaring convergence). `precond = None`
/// means `M = I`.
pub fn gmres_right_preconditioned(
    a: &dyn LinOp,
    precond: Option<&dyn LinOp>,
    b: &[C64],
    tol: f64,
    maxit: usize,
) -> Result<GmresResult> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(b.len(), n));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(GmresResult {
            solution: vec![C64::default(); n],
            iterations: 0,
            final_residual: 0.0,
            converged: true,
            history: vec![0.0],
        });
    }

    let apply_precond = |x: &[C64]| -> Vec<C64> {
        match precond {
            Some(m) => m.apply_alloc(x),
            None => x.to_vec(),
        }
    };

    // Arnoldi data: basis of the preconditioned Krylov space, Hessenberg
    // columns after Givens rotations (upper triangular R), rotation pairs,
    // and the rotated right-hand side g
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut rot: Vec<(f64, C64)> = Vec::new();
    let mut g: Vec<C64> = vec![C64::new(b_norm, 0.0)];
    let mut history = vec![1.0f64];

    let mut v0 = b.to_vec();
    scale(C64::new(1.0 / b_norm, 0.0), &mut v0);
    basis.push(v0);

    // assemble the current iterate from the triangular system R y = g
    let form_solution =
        |k: usize, r_cols: &[Vec<C64>], g: &[C64], basis: &[Vec<C64>]| -> Vec<C64> {
            let mut y = vec![C64::default(); k];
            for i in (0..k).rev() {
                let mut acc = g[i];
                for j in i + 1..k {
                    acc -= r_cols[j][i] * y[j];
                }
                y[i] = acc / r_cols[i][i];
            }
            let mut z = vec![C64::default(); n];
            for j in 0..k {
                axpy(y[j], &basis[j], &mut z);
            }
            apply_precond(&z)
        };

    let true_residual = |x: &[C64]| -> f64 {
        let ax = a.apply_alloc(x);
        let mut r = 0.0;
        for i in 0..n {
            r += (b[i] - ax[i]).norm_sqr();
        }
        r.sqrt() / b_norm
    };

    let mut k = 0usize;
    loop {
        // Arnoldi step k: w = A M^{-1} v_k
        let z = apply_precond(&basis[k]);
        let mut w = a.apply_alloc(&z);
        let w_norm_before = norm2(&w);
        let mut h_col: Vec<C64> = Vec::with_capacity(k + 2);
        for vi in basis.iter() {
            let hij = dot(vi, &w);
            axpy(-hij, vi, &mut w);
            h_col.push(hij);
        }
        // one reorthogonalisation pass when cancellation is detected
        if norm2(&w) < std::f64::consts::FRAC_1_SQRT_2 * w_norm_before {
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(vi, &w);
                axpy(-hij, vi, &mut w);
                h_col[i] += hij;
            }
        }
        let h_sub = norm2(&w);
        k += 1;

        // apply the accumulated rotations to the new column
        for (i, &(c, s)) in rot.iter().enumerate() {
            let x = h_col[i];
            let y = h_col[i + 1];
            h_col[i] = x * c + s * y;
            h_col[i + 1] = -s.conj() * x + y * c;
        }
        // new rotation annihilating the subdiagonal
        let (c, s, r) = super::dense::givens(h_col[k - 1], C64::new(h_sub, 0.0));
        h_col[k - 1] = r;
        rot.push((c, s));
        let g_k = g[k - 1];
        g.push(-s.conj() * g_k);
        g[k - 1] = g_k * c;
        r_cols.push(h_col);

        let rec_residual = g[k].norm() / b_norm;
        history.push(rec_residual.min(history[k - 1]));

        let breakdown = h_sub <= 1e-14 * w_norm_before.max(1.0);
        if rec_residual <= tol || breakdown || k >= maxit {
            let x = form_solution(k, &r_cols, &g, &basis);
            let res = true_residual(&x);
            if res <= tol {
                return Ok(GmresResult {
                    solution: x,
                    iterations: k,
                    final_residual: res,
                    converged: true,
                    history,
                });
            }
            if breakdown {
                // invariant space reached but the residual is still above
                // tolerance: the operator is singular for this right-hand side
                return Err(Error::Breakdown { residual: res, tol });
            }
            if k >= maxit {
                return Ok(GmresResult {
                    solution: x,
                    iterations: k,
                    final_residual: res,
                    converged: false,
                    history,
                });
            }
            // recurrence under-estimated the true residual: keep iterating
        }
        if !breakdown {
            scale(C64::new(1.0 / h_sub, 0.0), &mut w);
            basis.push(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CooBuilder, CsrMatrix, DenseLu};
    use crate::rng::SplitMix64;

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(7);
        let b: Vec<C64> = (0..7).map(|i| C64::new(i as f64 + 1.0, -0.5)).collect();
        let res = gmres_right_preconditioned(&a, None, &b, 1e-10, 50).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        for (x, want) in res.solution.iter().zip(&b) {
            assert!((x - want).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_two_eigenvalues_two_iterations() {
        let mut builder = CooBuilder::new(2, 2);
        builder.push(0, 0, C64::new(1.0, 0.0));
        builder.push(1, 1, C64::new(2.0, 0.0));
        let a = builder.build();
        let b = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let res = gmres_right_preconditioned(&a, None, &b, 1e-12, 10).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 2);
        assert!((res.solution[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((res.solution[1] - C64::new(0.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn random_system_matches_dense_solve() {
        let mut rng = SplitMix64::new(2024);
        let n = 10;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = rng.next_complex() * 0.3;
                builder.push(i, j, v);
            }
            builder.push(i, i, C64::new(3.0, 0.0));
        }
        let a = builder.build();
        let b: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let res = gmres_right_preconditioned(&a, None, &b, 1e-12, 10).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 10);
        let dense = DenseLu::factor(&a.to_dense()).unwrap();
        let want = dense.solve(&b);
        let scale: f64 = want.iter().map(|v| v.norm()).sum();
        for i in 0..n {
            assert!((res.solution[i] - want[i]).norm() < 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn history_is_monotone_non_increasing() {
        let mut rng = SplitMix64::new(7);
        let n = 30;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.next_u64() % 4 == 0 {
                    builder.push(i, j, rng.next_complex());
                }
            }
            builder.push(i, i, C64::new(5.0, 1.0));
        }
        let a = builder.build();
        let b: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let res = gmres_right_preconditioned(&a, None, &b, 1e-10, n).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn maxit_reached_reports_unconverged() {
        // a stiff nonsymmetric system will not converge in 2 iterations
        let mut rng = SplitMix64::new(31);
        let n = 40;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                builder.push(i, j, rng.next_complex());
            }
            builder.push(i, i, C64::new(1.5, 0.0));
        }
        let a = builder.build();
        let b: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let res = gmres_right_preconditioned(&a, None, &b, 1e-14, 2).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
        assert_eq!(res.history.len(), 3);
    }

    #[test]
    fn preconditioning_with_exact_inverse_takes_one_iteration() {
        let mut rng = SplitMix64::new(55);
        let n = 12;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                builder.push(i, j, rng.next_complex() * 0.4);
            }
            builder.push(i, i, C64::new(4.0, 0.0));
        }
        let a = builder.build();
        let lu = DenseLu::factor(&a.to_dense()).unwrap();
        struct InvOp {
            lu: DenseLu,
            n: usize,
        }
        impl LinOp for InvOp {
            fn dim(&self) -> usize {
                self.n
            }
            fn apply(&self, x: &[C64], y: &mut [C64]) {
                y.copy_from_slice(&self.lu.solve(x));
            }
        }
        let inv = InvOp { lu, n };
        let b: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let res = gmres_right_preconditioned(&a, Some(&inv), &b, 1e-10, 20).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
    }
}
