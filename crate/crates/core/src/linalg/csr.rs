//! Compressed-sparse-row complex matrix.

use num_complex::Complex64 as C64;
use std::io::Write;

use crate::error::{Error, Result};

/// Complex sparse matrix in CSR form.
///
/// Invariants: `row_offsets` has length `nrows + 1`, is monotone
/// non-decreasing and ends at `values.len()`; column indices are strictly
/// increasing within each row, so there are no duplicate entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<C64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), nrows + 1);
        debug_assert_eq!(*row_offsets.last().unwrap(), col_indices.len());
        debug_assert_eq!(col_indices.len(), values.len());
        debug_assert!(row_offsets.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!((0..nrows).all(|i| {
            col_indices[row_offsets[i]..row_offsets[i + 1]]
                .windows(2)
                .all(|w| w[0] < w[1])
        }));
        Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => C64::default(),
        }
    }

    /// Largest entry modulus, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = C64::default();
            for p in lo..hi {
                acc += self.values[p] * x[self.col_indices[p]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Extract the submatrix with the given (sorted, distinct) row and
    /// column index sets, reindexed to 0..len.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        let mut col_map = vec![usize::MAX; self.ncols];
        for (local, &g) in cols.iter().enumerate() {
            col_map[g] = local;
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &r in rows {
            let (rcols, rvals) = self.row(r);
            for (&c, &v) in rcols.iter().zip(rvals) {
                let local = col_map[c];
                if local != usize::MAX {
                    col_indices.push(local);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix::new(rows.len(), cols.len(), row_offsets, col_indices, values)
    }

    /// Symmetric diagonal scaling `D A D` with `d` the diagonal of `D`.
    pub fn scale_symmetric(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.nrows);
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for i in 0..self.nrows {
            let lo = out.row_offsets[i];
            let hi = out.row_offsets[i + 1];
            for p in lo..hi {
                out.values[p] *= d[i] * d[out.col_indices[p]];
            }
        }
        out
    }

    /// `A - B` for matrices with identical shape (patterns may differ).
    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut builder = CooBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                builder.push(i, c, v);
            }
            let (cols, vals) = other.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                builder.push(i, c, -v);
            }
        }
        builder.build()
    }

    pub fn to_dense(&self) -> super::DenseMat {
        let mut m = super::DenseMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// Write in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e} {:.17e}", i + 1, c + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn export_matrix_market(&self, path: &std::path::Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_matrix_market(&mut file)
    }
}

impl super::LinOp for CsrMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y);
    }
}

/// Triplet accumulator. Duplicate entries are summed on `build`.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; self.nrows + 1];
        let mut col_indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            // entries are sorted, so a duplicate is adjacent: same row (row i
            // already has entries) and same column as the last pushed entry
            let merge = row_offsets[i + 1] > 0 && col_indices.last() == Some(&j);
            if merge {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
            }
        }
        for i in 0..self.nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        CsrMatrix::new(self.nrows, self.ncols, row_offsets, col_indices, values)
    }
}

/// Parse a MatrixMarket complex coordinate file (inverse of the export).
pub fn read_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty MatrixMarket file".into()))?;
    if !header.starts_with("%%MatrixMarket matrix coordinate complex") {
        return Err(Error::Config(format!("unsupported header: {header}")));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size_line = lines
        .next()
        .ok_or_else(|| Error::Config("missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Config("bad size".into())))
        .collect::<Result<_>>()?;
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut builder = CooBuilder::with_capacity(nrows, ncols, nnz);
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(Error::Config(format!("bad entry line: {line}")));
        }
        let i: usize = tok[0]
            .parse()
            .map_err(|_| Error::Config("bad row".into()))?;
        let j: usize = tok[1]
            .parse()
            .map_err(|_| Error::Config("bad col".into()))?;
        let re: f64 = tok[2].parse().map_err(|_| Error::Config("bad re".into()))?;
        let im: f64 = tok[3].parse().map_err(|_| Error::Config("bad im".into()))?;
        builder.push(i - 1, j - 1, C64::new(re, im));
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_matrix() -> CsrMatrix {
        // [[1, 0, 2], [0, 3i, 0], [4, 0, 5+i]]
        let mut b = CooBuilder::new(3, 3);
        b.push(0, 0, C64::new(1.0, 0.0));
        b.push(0, 2, C64::new(2.0, 0.0));
        b.push(1, 1, C64::new(0.0, 3.0));
        b.push(2, 0, C64::new(4.0, 0.0));
        b.push(2, 2, C64::new(5.0, 1.0));
        b.build()
    }

    #[test]
    fn build_sorts_and_sums_duplicates() {
        let mut b = CooBuilder::new(2, 2);
        b.push(1, 1, C64::new(1.0, 0.0));
        b.push(0, 1, C64::new(2.0, 0.0));
        b.push(1, 1, C64::new(3.0, 0.0));
        b.push(0, 0, C64::new(-1.0, 0.0));
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 1), C64::new(4.0, 0.0));
        assert_eq!(m.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(m.get(0, 0), C64::new(-1.0, 0.0));
        assert!(m.col_indices().windows(2).count() > 0);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = small_matrix();
        let x = [C64::new(1.0, 1.0), C64::new(2.0, 0.0), C64::new(0.0, -1.0)];
        let y = m.matvec_alloc(&x);
        assert_eq!(y[0], C64::new(1.0, 1.0) + C64::new(0.0, -2.0));
        assert_eq!(y[1], C64::new(0.0, 3.0) * C64::new(2.0, 0.0));
        assert_eq!(
            y[2],
            C64::new(4.0, 4.0) + C64::new(5.0, 1.0) * C64::new(0.0, -1.0)
        );
    }

    #[test]
    fn submatrix_reindexes() {
        let m = small_matrix();
        let s = m.submatrix(&[0, 2], &[0, 2]);
        assert_eq!(s.nrows(), 2);
        assert_eq!(s.get(0, 0), C64::new(1.0, 0.0));
        assert_eq!(s.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(s.get(1, 0), C64::new(4.0, 0.0));
        assert_eq!(s.get(1, 1), C64::new(5.0, 1.0));
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = small_matrix();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate complex general"));
        let back = read_matrix_market(&text).unwrap();
        assert_eq!(m, back);
    }

    proptest! {
        // matvec(A, ax + by) = a matvec(A, x) + b matvec(A, y) to 1e-13 relative
        #[test]
        fn matvec_is_linear(seed in 0u64..1000) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let n = 8;
            let mut b = CooBuilder::new(n, n);
            for i in 0..n {
                for j in 0..n {
                    if rng.next_u64() % 3 == 0 {
                        b.push(i, j, rng.next_complex());
                    }
                }
                b.push(i, i, rng.next_complex());
            }
            let m = b.build();
            let x: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
            let y: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
            let alpha = rng.next_complex();
            let beta = rng.next_complex();
            let mixed: Vec<C64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = m.matvec_alloc(&mixed);
            let ax = m.matvec_alloc(&x);
            let ay = m.matvec_alloc(&y);
            let scale: f64 = lhs.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
            for i in 0..n {
                let rhs = alpha * ax[i] + beta * ay[i];
                prop_assert!((lhs[i] - rhs).norm() <= 1e-13 * scale);
            }
        }
    }
}
