//! Compressed-row sparse matrices and the deterministic vector kernels used
//! throughout assembly and the Krylov solvers.
//!
//! Row-parallel products never reduce across rows, and all dot products sum
//! fixed-size chunks in a fixed order, so results are bit-identical for any
//! rayon thread count.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per rayon task in matrix-vector products.
const ROW_CHUNK: usize = 512;
/// Entries per partial sum in reductions.
const DOT_CHUNK: usize = 4096;

/// Anything that can be applied to a vector: matrices, block operators,
/// preconditioners.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = Op x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator. Duplicates are summed in insertion order
/// when converted, which keeps assembly bit-reproducible.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Default::default()
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn build(self) -> SparseMatrix {
        let n = self.vals.len();
        // counting sort by row keeps insertion order within a row
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut order = vec![0usize; n];
        for (k, &r) in self.rows.iter().enumerate() {
            order[next[r]] = k;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_ptr.push(0);
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for r in 0..self.nrows {
            scratch.clear();
            scratch.extend(
                order[counts[r]..counts[r + 1]]
                    .iter()
                    .map(|&k| (self.cols[k], k)),
            );
            // stable: equal columns stay in insertion order
            scratch.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                let mut v = 0.0;
                while i < scratch.len() && scratch[i].0 == c {
                    v += self.vals[scratch[i].1];
                    i += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            nrows: d.len(),
            ncols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds from raw CSR arrays, checking the sorted/unique column invariant.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1
            || col_idx.len() != values.len()
            || row_ptr[nrows] != col_idx.len()
            || row_ptr[0] != 0
        {
            return Err(Error::Dimension("inconsistent CSR arrays".into()));
        }
        for r in 0..nrows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(Error::Dimension(format!("row pointer decreases at {r}")));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return Err(Error::Dimension(format!(
                    "row {r}: columns not sorted, unique and in range"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = TripletBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push(i, j, m[(i, j)]);
                }
            }
        }
        t.build()
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `D^{-1/2} A D^{-1/2}` with `D = |diag(A)|`; rows with a zero
    /// diagonal are left unscaled.
    pub fn equilibrated(&self) -> Self {
        let w: Vec<f64> = self
            .diagonal()
            .iter()
            .map(|d| if *d != 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 })
            .collect();
        let mut out = self.clone();
        for r in 0..out.nrows {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.values[k] *= w[r] * w[out.col_idx[k]];
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                col_idx[next[c]] = r;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// `y = A x`, row-parallel.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec: x length");
        assert_eq!(y.len(), self.nrows, "matvec: y length");
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(chunk, ys)| {
                let base = chunk * ROW_CHUNK;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let r = base + i;
                    let mut acc = 0.0;
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        acc += self.values[k] * x[self.col_idx[k]];
                    }
                    *yi = acc;
                }
            });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x` without forming the transpose (sequential scatter).
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        y
    }

    /// Sparse product `self * rhs` (row-by-row Gustavson, rows in parallel).
    pub fn matmul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "matmul: inner dimensions");
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows)
            .into_par_iter()
            .map_init(
                || (vec![usize::MAX; rhs.ncols], Vec::<usize>::new(), vec![0.0; rhs.ncols]),
                |(marker, touched, acc), r| {
                    touched.clear();
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        let a = self.values[k];
                        let j = self.col_idx[k];
                        for kk in rhs.row_ptr[j]..rhs.row_ptr[j + 1] {
                            let c = rhs.col_idx[kk];
                            if marker[c] != r {
                                marker[c] = r;
                                acc[c] = 0.0;
                                touched.push(c);
                            }
                            acc[c] += a * rhs.values[kk];
                        }
                    }
                    touched.sort_unstable();
                    let vals = touched.iter().map(|&c| acc[c]).collect();
                    (touched.clone(), vals)
                },
            )
            .collect();
        Self::from_rows(self.nrows, rhs.ncols, rows)
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<(Vec<usize>, Vec<f64>)>) -> Self {
        let nnz = rows.iter().map(|(c, _)| c.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (c, v) in rows {
            col_idx.extend(c);
            values.extend(v);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `alpha * self + beta * other`, union sparsity pattern.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|r| {
                let (ca, va) = self.row(r);
                let (cb, vb) = other.row(r);
                let (mut i, mut j) = (0, 0);
                let mut cols = Vec::with_capacity(ca.len() + cb.len());
                let mut vals = Vec::with_capacity(ca.len() + cb.len());
                while i < ca.len() || j < cb.len() {
                    let next_a = ca.get(i).copied().unwrap_or(usize::MAX);
                    let next_b = cb.get(j).copied().unwrap_or(usize::MAX);
                    if next_a == next_b {
                        cols.push(next_a);
                        vals.push(alpha * va[i] + beta * vb[j]);
                        i += 1;
                        j += 1;
                    } else if next_a < next_b {
                        cols.push(next_a);
                        vals.push(alpha * va[i]);
                        i += 1;
                    } else {
                        cols.push(next_b);
                        vals.push(beta * vb[j]);
                        j += 1;
                    }
                }
                (cols, vals)
            })
            .collect();
        Self::from_rows(self.nrows, self.ncols, rows)
    }

    /// `(A + Aᵀ)/2`; used to remove round-off asymmetry from triple products.
    pub fn symmetrized(&self) -> SparseMatrix {
        self.add_scaled(0.5, &self.transpose(), 0.5)
    }

    /// Extracts `A[rows, cols]` where `rows`/`cols` list the kept global
    /// indices in order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let out_rows = rows
            .iter()
            .map(|&r| {
                let (cs, vs) = self.row(r);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for (&c, &v) in cs.iter().zip(vs) {
                    let m = col_map[c];
                    if m != usize::MAX {
                        cols.push(m);
                        vals.push(v);
                    }
                }
                // kept columns preserve order only if `cols` is increasing
                if cols.windows(2).any(|w| w[0] > w[1]) {
                    let mut pairs: Vec<_> = cols.into_iter().zip(vals).collect();
                    pairs.sort_by_key(|p| p.0);
                    pairs.into_iter().unzip()
                } else {
                    (cols, vals)
                }
            })
            .collect();
        Self::from_rows(rows.len(), cols.len(), out_rows)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Largest |A_ij - A_ji| relative to the largest |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let diff = self.add_scaled(1.0, &t, -1.0);
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d = diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            d / scale
        }
    }

    /// MatrixMarket coordinate format, general real.
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
}

/// Deterministic dot product: fixed chunks, partial sums added in order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.len() <= DOT_CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partials: Vec<f64> = a
        .par_chunks(DOT_CHUNK)
        .zip(b.par_chunks(DOT_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    y.par_chunks_mut(DOT_CHUNK)
        .zip(x.par_chunks(DOT_CHUNK))
        .for_each(|(ys, xs)| {
            for (yi, xi) in ys.iter_mut().zip(xs) {
                *yi += alpha * xi;
            }
        });
}
