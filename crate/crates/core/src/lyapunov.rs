//! Continuous Lyapunov equation `AᵀP + PA = -Q` for Hurwitz `A`.
//!
//! Two solvers: a dense Kronecker linearization for the 2×2 / 3×3 modal
//! subsystems, and a complex Schur (Bartels–Stewart) solver for the full
//! closed loop.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

use crate::closed_loop::{eigenvalues, hurwitz_eigenvalues};
use crate::error::{Error, Result};

/// Matrices up to this size go through the Kronecker solver.
const KRONECKER_MAX: usize = 4;

/// Solves `AᵀP + PA = -Q`, returning the symmetric solution `P`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() <= KRONECKER_MAX {
        solve_lyapunov_kronecker(a, q)
    } else {
        solve_lyapunov_schur(a, q)
    }
}

fn check_shapes(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidParameter { name: "a", reason: "must be a non-empty square matrix" });
    }
    if q.shape() != a.shape() {
        return Err(Error::InvalidParameter { name: "q", reason: "must match the shape of a" });
    }
    Ok(())
}

/// Vectorizes the equation as `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = -vec(Q)` and
/// solves it by LU. Cost is `O(n^6)`; intended for small `n`.
pub fn solve_lyapunov_kronecker(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(a, q)?;
    if !hurwitz_eigenvalues(&eigenvalues(a)?) {
        return Err(Error::Unstable { mode: None });
    }
    let n = a.nrows();
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::Numerical("singular Kronecker system"))?;
    let p = DMatrix::from_column_slice(n, n, solution.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Bartels–Stewart on the complex Schur form `A = U T Uᴴ`: the transformed
/// equation `TᴴX + XT = -UᴴQU` is solved column by column with forward
/// substitution, then `P = U X Uᴴ`.
pub fn solve_lyapunov_schur(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(a, q)?;
    let n = a.nrows();
    let (u, t) = crate::math::complex_schur(a)?;
    let diag: Vec<Complex<f64>> = t.diagonal().iter().copied().collect();
    if !hurwitz_eigenvalues(&diag) {
        return Err(Error::Unstable { mode: None });
    }

    let qc = q.map(|x| Complex::new(x, 0.0));
    let f = u.adjoint() * qc * &u;
    let mut x = DMatrix::<Complex<f64>>::zeros(n, n);
    for j in 0..n {
        let mut rhs: Vec<Complex<f64>> = (0..n).map(|r| -f[(r, j)]).collect();
        for k in 0..j {
            let tkj = t[(k, j)];
            if tkj != Complex::new(0.0, 0.0) {
                for (r, value) in rhs.iter_mut().enumerate() {
                    *value -= x[(r, k)] * tkj;
                }
            }
        }
        for r in 0..n {
            let mut acc = rhs[r];
            for i in 0..r {
                acc -= t[(i, r)].conj() * x[(i, j)];
            }
            let denom = t[(r, r)].conj() + t[(j, j)];
            if crate::math::cabs(denom) == 0.0 {
                return Err(Error::Numerical("singular Lyapunov operator"));
            }
            x[(r, j)] = acc / denom;
        }
    }
    let p = (&u * x * u.adjoint()).map(|z| z.re);
    Ok((&p + p.transpose()) * 0.5)
}

/// `‖AᵀP + PA + Q‖_F`.
pub fn residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}
