//! Dense complex matrices, LU factorisations, and a general (non-Hermitian)
//! complex eigensolver.
//!
//! The eigensolver follows the classic dense pipeline: balancing, Householder
//! reduction to upper Hessenberg form, explicit single-shift QR iteration with
//! deflation accumulating the Schur vectors, and eigenvector recovery by
//! back-substitution on the triangular Schur factor. It is the brute-force
//! oracle for every eigenproblem in the crate, so clarity and robustness win
//! over speed; intended for dimensions up to a couple of thousand.

use num_complex::Complex64 as C64;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl DenseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C64::default(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols);
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        assert_eq!(col.len(), self.nrows);
        for i in 0..self.nrows {
            self[(i, j)] = col[i];
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<C64>())
            .collect()
    }

    pub fn mul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = DenseMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self[(i, k)];
                if aik == C64::default() {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn conj_transpose(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, alpha: C64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }
}

impl Index<(usize, usize)> for DenseMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

/// LU factorisation with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMat,
    row_perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMat) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut lu = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(1.0);
        for k in 0..n {
            let (mut pivot_row, mut pivot_mag) = (k, lu[(k, k)].norm());
            for i in k + 1..n {
                let mag = lu[(i, k)].norm();
                if mag > pivot_mag {
                    pivot_row = i;
                    pivot_mag = mag;
                }
            }
            if pivot_mag < 1e-14 * scale {
                return Err(Error::SingularMatrix {
                    row: row_perm[pivot_row],
                    magnitude: pivot_mag,
                });
            }
            if pivot_row != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                row_perm.swap(k, pivot_row);
            }
            let inv = C64::new(1.0, 0.0) / lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] * inv;
                lu[(i, k)] = factor;
                if factor != C64::default() {
                    for j in k + 1..n {
                        let upd = factor * lu[(k, j)];
                        lu[(i, j)] -= upd;
                    }
                }
            }
        }
        Ok(Self { lu, row_perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.row_perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Solve for every column of `b`, returning the solution matrix.
    pub fn solve_mat(&self, b: &DenseMat) -> DenseMat {
        let mut out = DenseMat::zeros(b.nrows, b.ncols);
        for j in 0..b.ncols {
            let col = self.solve(&b.column(j));
            out.set_column(j, &col);
        }
        out
    }
}

/// LU factorisation with complete (row and column) pivoting. Exposes the
/// pivot magnitudes and the column selection order, which the coarse-space
/// assembly uses as a rank filter.
#[derive(Debug, Clone)]
pub struct FullPivLu {
    lu: DenseMat,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    pivot_mags: Vec<f64>,
}

impl FullPivLu {
    pub fn factor(a: &DenseMat) -> Self {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut lu = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut pivot_mags = Vec::with_capacity(n);
        for k in 0..n {
            let (mut pr, mut pc, mut pm) = (k, k, 0.0f64);
            for i in k..n {
                for j in k..n {
                    let mag = lu[(i, j)].norm();
                    if mag > pm {
                        pr = i;
                        pc = j;
                        pm = mag;
                    }
                }
            }
            pivot_mags.push(pm);
            if pm == 0.0 {
                // remaining block is exactly zero
                for _ in k + 1..n {
                    pivot_mags.push(0.0);
                }
                break;
            }
            if pr != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pr, j)];
                    lu[(pr, j)] = tmp;
                }
                row_perm.swap(k, pr);
            }
            if pc != k {
                for i in 0..n {
                    let tmp = lu[(i, k)];
                    lu[(i, k)] = lu[(i, pc)];
                    lu[(i, pc)] = tmp;
                }
                col_perm.swap(k, pc);
            }
            let inv = C64::new(1.0, 0.0) / lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] * inv;
                lu[(i, k)] = factor;
                if factor != C64::default() {
                    for j in k + 1..n {
                        let upd = factor * lu[(k, j)];
                        lu[(i, j)] -= upd;
                    }
                }
            }
        }
        Self {
            lu,
            row_perm,
            col_perm,
            pivot_mags,
        }
    }

    /// Numerical rank: number of pivots at least `rel_tol` times the first.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let first = self.pivot_mags.first().copied().unwrap_or(0.0);
        if first == 0.0 {
            return 0;
        }
        self.pivot_mags
            .iter()
            .take_while(|&&p| p >= rel_tol * first)
            .count()
    }

    /// Original column indices in pivot-selection order.
    pub fn column_order(&self) -> &[usize] {
        &self.col_perm
    }

    pub fn is_nonsingular(&self, rel_tol: f64) -> bool {
        self.rank(rel_tol) == self.lu.nrows
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        let mut y: Vec<C64> = self.row_perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc / self.lu[(i, i)];
        }
        // undo column permutation
        let mut x = vec![C64::default(); n];
        for k in 0..n {
            x[self.col_perm[k]] = y[k];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// General complex eigensolver
// ---------------------------------------------------------------------------

/// Complex Givens rotation mapping (a, b) to (r, 0):
/// `[c, s; -conj(s), c] [a; b] = [r; 0]` with real `c`.
pub(crate) fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    if b == C64::default() {
        return (1.0, C64::default(), a);
    }
    if a == C64::default() {
        let bn = b.norm();
        return (0.0, b.conj() / bn, C64::new(bn, 0.0));
    }
    let an = a.norm();
    let d = (an * an + b.norm_sqr()).sqrt();
    let c = an / d;
    let phase = a / an;
    let s = phase * b.conj() / d;
    let r = phase * d;
    (c, s, r)
}

/// Parlett–Reinsch balancing by powers of two. Returns the diagonal scaling
/// `d` such that the balanced matrix is `D^{-1} A D`.
fn balance(a: &mut DenseMat) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0f64; n];
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    r += a[(i, j)].norm();
                    c += a[(j, i)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form, accumulating the unitary
/// transform into `q` (so that on entry `a`, on exit `q^H a q = h`).
fn hessenberg(a: &mut DenseMat, q: &mut DenseMat) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, rows k+1..n
        let mut norm_x = 0.0;
        for i in k + 1..n {
            norm_x += a[(i, k)].norm_sqr();
        }
        let norm_x = norm_x.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0 == C64::default() {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // a := (I - 2 v v^H) a  on rows k+1..n
        for j in k..n {
            let mut dot = C64::default();
            for (off, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[(k + 1 + off, j)];
            }
            let dot = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let upd = vi * dot;
                a[(k + 1 + off, j)] -= upd;
            }
        }
        // a := a (I - 2 v v^H)  on cols k+1..n
        for i in 0..n {
            let mut dot = C64::default();
            for (off, vi) in v.iter().enumerate() {
                dot += a[(i, k + 1 + off)] * vi;
            }
            let dot = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let upd = dot * vi.conj();
                a[(i, k + 1 + off)] -= upd;
            }
        }
        // q := q (I - 2 v v^H)
        for i in 0..n {
            let mut dot = C64::default();
            for (off, vi) in v.iter().enumerate() {
                dot += q[(i, k + 1 + off)] * vi;
            }
            let dot = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let upd = dot * vi.conj();
                q[(i, k + 1 + off)] -= upd;
            }
        }
        // clean the annihilated part
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C64::default();
        }
    }
}

/// Eigenvalues of a 2x2 complex matrix [[a, b], [c, d]].
fn eig2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    (l1, l2)
}

/// Single-shift QR iteration on an upper Hessenberg matrix `h`, accumulating
/// the Schur vectors into `z`. On success `h` is upper triangular and
/// `z^H a z = h` for the original matrix.
fn hessenberg_qr(
    h: &mut DenseMat,
    z: Option<&mut DenseMat>,
    max_sweeps_per_eig: usize,
) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let mut z = z;
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut stale = 0usize;
    let budget = max_sweeps_per_eig * n + 100;
    let mut total = 0usize;

    while hi > 0 {
        // find the start of the active block: the largest l <= hi with a
        // negligible subdiagonal entry below it
        let mut lo = 0;
        for l in (1..=hi).rev() {
            let sub = h[(l, l - 1)].norm();
            let local = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let thresh = eps * if local > 0.0 { local } else { h.max_abs() };
            if sub <= thresh {
                h[(l, l - 1)] = C64::default();
                lo = l;
                break;
            }
        }
        if lo == hi {
            hi -= 1;
            stale = 0;
            continue;
        }
        total += 1;
        stale += 1;
        if total > budget {
            return Err(Error::EigensolverStalled {
                converged: n - 1 - hi,
                requested: n,
                tol: eps,
            });
        }

        // shift: eigenvalue of the trailing 2x2 closest to h[hi,hi]; take an
        // exceptional shift when progress stalls
        let shift = if stale % 12 == 0 {
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (l1, l2) = eig2x2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            if (l1 - h[(hi, hi)]).norm() <= (l2 - h[(hi, hi)]).norm() {
                l1
            } else {
                l2
            }
        };

        // explicit shifted QR sweep on the window [lo..=hi]
        let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        for k in lo..hi {
            let (c, s, r) = givens(h[(k, k)], h[(k + 1, k)]);
            rotations.push((c, s));
            h[(k, k)] = r;
            h[(k + 1, k)] = C64::default();
            // apply to the remaining columns of rows k, k+1 (full width for
            // the trailing coupling block)
            for j in k + 1..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
        }
        // multiply back on the right: h := R Q^H-side, i.e. apply each
        // rotation to columns (k, k+1)
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + idx;
            let top = (k + 2).min(hi) + 1; // rows 0..top have entries in these columns
            for i in 0..top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -(x * s) + y * c;
            }
            if let Some(zm) = z.as_deref_mut() {
                for i in 0..n {
                    let x = zm[(i, k)];
                    let y = zm[(i, k + 1)];
                    zm[(i, k)] = x * c + y * s.conj();
                    zm[(i, k + 1)] = -(x * s) + y * c;
                }
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(())
}

/// Eigenvalues of a general complex matrix (no eigenvectors).
pub fn dense_eigenvalues(a: &DenseMat) -> Result<Vec<C64>> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = a.clone();
    balance(&mut work);
    let mut q = DenseMat::identity(n);
    hessenberg(&mut work, &mut q);
    hessenberg_qr(&mut work, None, 60)?;
    Ok((0..n).map(|i| work[(i, i)]).collect())
}

/// Full eigendecomposition of a general complex matrix: eigenvalues and
/// right eigenvectors (normalised to unit 2-norm).
pub fn dense_eigen_full(a: &DenseMat) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if n == 1 {
        return Ok((vec![a[(0, 0)]], vec![vec![C64::new(1.0, 0.0)]]));
    }
    let mut t = a.clone();
    let d = balance(&mut t);
    let mut z = DenseMat::identity(n);
    hessenberg(&mut t, &mut z);
    hessenberg_qr(&mut t, Some(&mut z), 60)?;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    // eigenvector of the triangular factor for each eigenvalue, by
    // back-substitution with guarded denominators
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![C64::default(); n];
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut num = C64::default();
            for j in i + 1..=k {
                num -= t[(i, j)] * y[j];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[i] = num / den;
        }
        // v = Z y, then undo balancing (eigenvectors of A are D * v_balanced)
        let mut v = vec![C64::default(); n];
        for i in 0..n {
            let mut acc = C64::default();
            for j in 0..=k {
                acc += z[(i, j)] * y[j];
            }
            v[i] = acc * d[i];
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn residual(a: &DenseMat, lambda: C64, v: &[C64]) -> f64 {
        let av = a.matvec(v);
        let mut r = 0.0;
        for i in 0..v.len() {
            r += (av[i] - lambda * v[i]).norm_sqr();
        }
        r.sqrt()
    }

    #[test]
    fn lu_solves_identity() {
        let a = DenseMat::identity(5);
        let lu = DenseLu::factor(&a).unwrap();
        let b: Vec<C64> = (1..=5).map(|i| C64::new(i as f64, 0.0)).collect();
        let x = lu.solve(&b);
        for i in 0..5 {
            assert!((x[i] - b[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn lu_requires_pivoting() {
        // [[0,1],[1,0]] x = (a,b) -> x = (b,a)
        let a = DenseMat::from_rows(&[
            vec![C64::default(), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::default()],
        ]);
        let lu = DenseLu::factor(&a).unwrap();
        let x = lu.solve(&[C64::new(3.0, 1.0), C64::new(-2.0, 0.5)]);
        assert!((x[0] - C64::new(-2.0, 0.5)).norm() < 1e-14);
        assert!((x[1] - C64::new(3.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn lu_detects_singularity() {
        let a = DenseMat::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
            vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0)],
        ]);
        assert!(matches!(
            DenseLu::factor(&a),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn full_piv_rank_detection() {
        let a = DenseMat::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)],
            vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0), C64::new(6.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)],
        ]);
        let lu = FullPivLu::factor(&a);
        assert_eq!(lu.rank(1e-12), 2);
    }

    #[test]
    fn full_piv_solve_round_trip() {
        let mut rng = SplitMix64::new(11);
        let n = 12;
        let mut a = DenseMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.next_complex();
            }
            a[(i, i)] += C64::new(4.0, 0.0);
        }
        let lu = FullPivLu::factor(&a);
        assert!(lu.is_nonsingular(1e-12));
        let b: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let x = lu.solve(&b);
        let ax = a.matvec(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn eigen_diagonal() {
        let a = DenseMat::from_diag(&[C64::new(3.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let mut values = dense_eigenvalues(&a).unwrap();
        values.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((values[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((values[1] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((values[2] - C64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigen_rotation_matrix() {
        // 2D rotation by 90 degrees has eigenvalues +-i
        let a = DenseMat::from_rows(&[
            vec![C64::default(), C64::new(-1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::default()],
        ]);
        let (values, vectors) = dense_eigen_full(&a).unwrap();
        for (lambda, v) in values.iter().zip(&vectors) {
            assert!((lambda.norm() - 1.0).abs() < 1e-12);
            assert!(lambda.re.abs() < 1e-12);
            assert!(residual(&a, *lambda, v) < 1e-12);
        }
    }

    #[test]
    fn eigen_random_residuals() {
        let mut rng = SplitMix64::new(3);
        for n in [5usize, 20, 60] {
            let mut a = DenseMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = rng.next_complex();
                }
            }
            let (values, vectors) = dense_eigen_full(&a).unwrap();
            assert_eq!(values.len(), n);
            let scale = a.max_abs() * n as f64;
            for (lambda, v) in values.iter().zip(&vectors) {
                assert!(
                    residual(&a, *lambda, v) < 1e-10 * scale,
                    "residual too large for n = {n}"
                );
            }
            // trace check: sum of eigenvalues equals trace
            let tr: C64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: C64 = values.iter().sum();
            assert!((tr - sum).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn eigen_defective_jordan_block() {
        // Jordan block: eigenvalue 2 with multiplicity 3; eigenvalues must
        // still come out clustered near 2
        let mut a = DenseMat::zeros(3, 3);
        for i in 0..3 {
            a[(i, i)] = C64::new(2.0, 0.0);
            if i + 1 < 3 {
                a[(i, i + 1)] = C64::new(1.0, 0.0);
            }
        }
        let values = dense_eigenvalues(&a).unwrap();
        for v in values {
            assert!((v - C64::new(2.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn eigen_badly_scaled() {
        // balancing should handle widely varying row/column scales
        let mut a = DenseMat::zeros(3, 3);
        a[(0, 0)] = C64::new(1.0, 0.0);
        a[(0, 1)] = C64::new(1e8, 0.0);
        a[(1, 0)] = C64::new(1e-8, 0.0);
        a[(1, 1)] = C64::new(2.0, 0.0);
        a[(2, 2)] = C64::new(3.0, 0.0);
        let mut values = dense_eigenvalues(&a).unwrap();
        values.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        // exact eigenvalues of the 2x2 block: (3 +- sqrt(1+4))/2
        let s = 5.0f64.sqrt();
        assert!((values[0].re - (3.0 - s) / 2.0).abs() < 1e-9);
        assert!((values[1].re - (3.0 + s) / 2.0).abs() < 1e-9);
        assert!((values[2].re - 3.0).abs() < 1e-9);
    }
}
