//! Complex sparse and dense linear algebra kernels.
//!
//! Everything operates on `num_complex::Complex64`. The sparse side provides
//! a CSR matrix, an LU factorisation with fill-reducing ordering, and full
//! (unrestarted) right-preconditioned GMRES. The dense side provides an LU
//! and a general complex eigensolver which doubles as the brute-force oracle
//! for every generalised eigenproblem in the crate; `shift_invert_arnoldi`
//! is the production path for large sparse pencils.

mod csr;
mod dense;
mod eigen;
mod gmres;
mod lu;

pub use csr::{read_matrix_market, CooBuilder, CsrMatrix};
pub use dense::{dense_eigenvalues, DenseLu, DenseMat, FullPivLu};
pub use eigen::{
    dense_eigen, dense_generalized_eigen, shift_invert_arnoldi, EigenPairs, SpectralFilter,
    DEFAULT_EIG_TOL,
};
pub use gmres::{gmres_right_preconditioned, GmresResult, IdentityOp, LinOp};
pub use lu::SparseLu;

use num_complex::Complex64 as C64;

/// Conjugated dot product `x^H y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Euclidean norm.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `x *= alpha`.
pub fn scale(alpha: C64, x: &mut [C64]) {
    for xi in x {
        *xi *= alpha;
    }
}
