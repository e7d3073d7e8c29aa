//! Compressed sparse row storage for complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

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
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Duplicate entries are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
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
        let mut m = CsrMatrix { nrows, ncols, indptr, indices, data };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.data.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return;
        }
        let triplets: Vec<_> = self.triplets().filter(|t| t.2 != C64::new(0.0, 0.0)).collect();
        let mut indptr = vec![0; self.nrows + 1];
        for &(r, _, _) in &triplets {
            indptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        self.indices = triplets.iter().map(|t| t.1).collect();
        self.data = triplets.iter().map(|t| t.2).collect();
        self.indptr = indptr;
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.data[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.data[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    /// `out += scale * self * x`.
    pub fn mul_vec_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *o += scale * acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m.prune();
        m
    }

    pub fn add(&self, other: &CsrMatrix) -> Self {
        self.add_scaled(C64::new(1.0, 0.0), other)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: C64, other: &CsrMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch in sparse add");
        let t = self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, s * v))).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in sparse product");
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.add_scaled(C64::new(-1.0, 0.0), other).max_abs()
    }

    /// Largest entry of `|M - M^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// Submatrix on the rows and columns listed in `indices` (which must be sorted).
    pub fn restrict(&self, indices: &[usize]) -> CsrMatrix {
        let pos = |c: usize| indices.binary_search(&c).ok();
        let mut t = Vec::new();
        for (i, &r) in indices.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(j) = pos(c) {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(indices.len(), indices.len(), t)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_merge_and_prune() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (1, 0, c(2.0, 1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(2.0, 1.0));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn product_matches_dense() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 1, c(1.0, 2.0)), (2, 0, c(0.5, 0.0)), (1, 1, c(0.0, -1.0))]);
        let b = CsrMatrix::from_triplets(3, 3, vec![(1, 2, c(3.0, 0.0)), (0, 0, c(1.0, 1.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert!((a.matmul(&b).to_dense() - dense).norm() < 1e-15);
        assert_eq!(a.adjoint().to_dense(), a.to_dense().adjoint());
    }

    #[test]
    fn restriction_keeps_block() {
        let a = CsrMatrix::from_triplets(4, 4, vec![(0, 3, c(1.0, 0.0)), (3, 0, c(1.0, 0.0)), (1, 2, c(5.0, 0.0))]);
        let r = a.restrict(&[0, 3]);
        assert_eq!(r.to_dense(), DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
    }
}
