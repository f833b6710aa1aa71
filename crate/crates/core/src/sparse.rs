//! Compressed sparse row storage for complex double-precision matrices.
//!
//! Every constructor produces canonical storage: column indices strictly
//! increasing within each row, no duplicate entries, and no explicitly stored
//! zeros. Arithmetic keeps that form, so structural equality is value
//! equality.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};

/// Entries with magnitude below this are dropped on construction and after
/// arithmetic.
pub const PRUNE_TOL: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if v != ZERO {
                indices.push(i);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed
    /// and entries below `prune` in magnitude are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I, prune: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(QError::Shape(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut acc = ZERO;
                while k < row.len() && row[k].0 == col {
                    acc += row[k].1;
                    k += 1;
                }
                if acc.norm() >= prune && acc != ZERO {
                    indices.push(col);
                    data.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    pub fn from_dense(m: &DMatrix<C64>, prune: f64) -> Self {
        let (nrows, ncols) = m.shape();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..nrows {
            for c in 0..ncols {
                let v = m[(r, c)];
                if v != ZERO && v.norm() >= prune {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Column vector from a dense slice.
    pub fn from_column(v: &[C64], prune: f64) -> Self {
        let mut indptr = Vec::with_capacity(v.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for &x in v {
            if x != ZERO && x.norm() >= prune {
                indices.push(0);
                data.push(x);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: v.len(),
            ncols: 1,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.data
    }

    /// Iterates stored entries as (row, col, value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.data[self.indptr[r] + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = f(*v));
        out.prune(0.0)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.nrows, self.ncols);
        }
        self.map_values(|v| v * s)
    }

    pub fn conj(&self) -> Self {
        self.map_values(|v| v.conj())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![ZERO; self.nnz()];
        for (r, c, v) in self.iter() {
            let dst = next[c];
            indices[dst] = r;
            data[dst] = v;
            next[c] += 1;
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        t.data.iter_mut().for_each(|v| *v = v.conj());
        t
    }

    /// Removes entries with magnitude below `tol` (and exact zeros).
    pub fn prune(mut self, tol: f64) -> Self {
        let mut write = 0;
        let mut new_ptr = Vec::with_capacity(self.nrows + 1);
        new_ptr.push(0);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = self.data[k];
                if v != ZERO && v.norm() >= tol {
                    self.indices[write] = self.indices[k];
                    self.data[write] = v;
                    write += 1;
                }
            }
            new_ptr.push(write);
        }
        self.indices.truncate(write);
        self.data.truncate(write);
        self.indptr = new_ptr;
        self
    }

    /// `alpha * self + beta * other`, entries below `prune` dropped.
    pub fn add_scaled(&self, alpha: C64, other: &Self, beta: C64, prune: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(QError::Shape(format!(
                "cannot add {:?} and {:?} matrices",
                self.shape(),
                other.shape()
            )));
        }
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let (mut a, a_end) = (self.indptr[r], self.indptr[r + 1]);
            let (mut b, b_end) = (other.indptr[r], other.indptr[r + 1]);
            while a < a_end || b < b_end {
                let ca = if a < a_end {
                    self.indices[a]
                } else {
                    usize::MAX
                };
                let cb = if b < b_end {
                    other.indices[b]
                } else {
                    usize::MAX
                };
                let (c, v) = if ca == cb {
                    a += 1;
                    b += 1;
                    (ca, alpha * self.data[a - 1] + beta * other.data[b - 1])
                } else if ca < cb {
                    a += 1;
                    (ca, alpha * self.data[a - 1])
                } else {
                    b += 1;
                    (cb, beta * other.data[b - 1])
                };
                if v != ZERO && v.norm() >= prune {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        })
    }

    /// Sparse-sparse product (row-wise accumulation).
    pub fn matmul(&self, rhs: &Self, prune: f64) -> Result<Self> {
        if self.ncols != rhs.nrows {
            return Err(QError::Shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let n = rhs.ncols;
        let mut acc = vec![ZERO; n];
        let mut marker = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = ZERO;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c];
                if v != ZERO && v.norm() >= prune {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: n,
            indptr,
            indices,
            data,
        })
    }

    /// `y = alpha * A x + y`.
    pub fn matvec_acc(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *out += alpha * s;
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *out = s;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let nrows = self.nrows * rhs.nrows;
        let ncols = self.ncols * rhs.ncols;
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() * rhs.nnz());
        let mut data = Vec::with_capacity(self.nnz() * rhs.nnz());
        indptr.push(0);
        for ra in 0..self.nrows {
            for rb in 0..rhs.nrows {
                for (ca, va) in self.row(ra) {
                    for (cb, vb) in rhs.row(rb) {
                        indices.push(ca * rhs.ncols + cb);
                        data.push(va * vb);
                    }
                }
                indptr.push(indices.len());
            }
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
        .prune(0.0)
    }

    /// Largest entrywise deviation `max |A - A†|`; `None` for non-square.
    pub fn hermitian_deviation(&self) -> Option<f64> {
        if self.nrows != self.ncols {
            return None;
        }
        let mut worst = 0.0f64;
        for (r, c, v) in self.iter() {
            let d = (v - self.get(c, r).conj()).norm();
            worst = worst.max(d);
        }
        Some(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Checks the structural invariants of canonical storage.
    pub fn is_canonical(&self) -> bool {
        self.indptr.len() == self.nrows + 1
            && self.indptr[0] == 0
            && self.indptr.windows(2).all(|w| w[0] <= w[1])
            && *self.indptr.last().unwrap() == self.data.len()
            && self.indices.len() == self.data.len()
            && (0..self.nrows).all(|r| {
                let s = &self.indices[self.indptr[r]..self.indptr[r + 1]];
                s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&c| c < self.ncols)
            })
    }
}

/// Row-major dense dump with complex entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseDump {
    pub shape: (usize, usize),
    pub data: Vec<Vec<[f64; 2]>>,
}

impl From<&CsrMatrix> for DenseDump {
    fn from(m: &CsrMatrix) -> Self {
        let dense = m.to_dense();
        let data = (0..m.nrows)
            .map(|r| {
                (0..m.ncols)
                    .map(|c| [dense[(r, c)].re, dense[(r, c)].im])
                    .collect()
            })
            .collect();
        DenseDump {
            shape: m.shape(),
            data,
        }
    }
}
