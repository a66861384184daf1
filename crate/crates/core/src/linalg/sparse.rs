//! Compressed sparse row storage for large Liouvillians.

use ndarray::{Array1, Array2};

use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut csr = Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        };
        csr.prune();
        csr
    }

    fn prune(&mut self) {
        let zero = C64::new(0.0, 0.0);
        if !self.data.iter().any(|&v| v == zero) {
            return;
        }
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k] != zero {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn from_dense(a: &Array2<C64>) -> Self {
        let zero = C64::new(0.0, 0.0);
        let triplets = a
            .indexed_iter()
            .filter(|(_, v)| **v != zero)
            .map(|((r, c), v)| (r, c, *v))
            .collect();
        Self::from_triplets(a.nrows(), a.ncols(), triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let mut y = Array1::zeros(self.nrows);
        self.matvec_into(x.as_slice().expect("contiguous"), y.as_slice_mut().unwrap());
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    /// `x† A` returned as a row (used for the trace-preservation check).
    pub fn left_matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let mut y = Array1::zeros(self.ncols);
        for (r, c, v) in self.iter() {
            y[c] += x[r].conj() * v;
        }
        y
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.iter() {
            a[[r, c]] = v;
        }
        a
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Nonzero entries of a dense matrix, for Kronecker assembly.
pub fn nonzeros(a: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    let zero = C64::new(0.0, 0.0);
    a.indexed_iter()
        .filter(|(_, v)| **v != zero)
        .map(|((r, c), v)| (r, c, *v))
        .collect()
}

/// Appends the triplets of `factor · (A ⊗ B)`.
pub fn push_kron(
    out: &mut Vec<(usize, usize, C64)>,
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    b_dim: usize,
    factor: C64,
) {
    out.reserve(a.len() * b.len());
    for &(ra, ca, va) in a {
        let scaled = va * factor;
        for &(rb, cb, vb) in b {
            out.push((ra * b_dim + rb, ca * b_dim + cb, scaled * vb));
        }
    }
}
