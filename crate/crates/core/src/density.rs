//! Density matrices and partial traces.
//!
//! A [`DensityMatrix`] stores a dense block over a sorted list of basis
//! indices (its support); entries outside the block are zero. Joint-space
//! matrices carry their [`SystemLayout`], reduced ones only their factor
//! dimensions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::layout::{Site, SystemLayout};
use crate::state::QuantumState;

/// Tolerance for the trace, Hermiticity and positivity invariants.
pub const DENSITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: Option<SystemLayout>,
    dims: Vec<usize>,
    support: Vec<usize>,
    block: DMatrix<C64>,
}

impl DensityMatrix {
    /// `|psi><psi|`, supported on the non-zero amplitudes of `state`.
    pub fn from_pure(state: &QuantumState) -> Self {
        let support = state.support();
        let v: Vec<C64> = support.iter().map(|&i| state.amplitudes()[i]).collect();
        let block = DMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj());
        DensityMatrix { layout: Some(*state.layout()), dims: state.layout().dims(), support, block }
    }

    pub fn from_block(layout: SystemLayout, support: Vec<usize>, block: DMatrix<C64>) -> Result<Self> {
        let dim = layout.dim();
        if block.nrows() != support.len() || block.ncols() != support.len() {
            return Err(Error::Dimension { expected: support.len(), got: block.nrows() });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || support.last().is_some_and(|&i| i >= dim) {
            return Err(Error::Layout("support must be sorted, unique and inside the space".into()));
        }
        Ok(DensityMatrix { layout: Some(layout), dims: layout.dims(), support, block })
    }

    /// Full-support matrix over factors of the given dimensions.
    pub fn from_dense(dims: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: matrix.nrows() });
        }
        Ok(DensityMatrix { layout: None, dims, support: (0..dim).collect(), block: matrix })
    }

    pub fn layout(&self) -> Option<&SystemLayout> {
        self.layout.as_ref()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn block(&self) -> &DMatrix<C64> {
        &self.block
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        match (self.support.binary_search(&i), self.support.binary_search(&j)) {
            (Ok(a), Ok(b)) => self.block[(a, b)],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> C64 {
        self.block.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.block - self.block.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        let h = (&self.block + self.block.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigenvalues();
        // Off-support directions have eigenvalue zero.
        let m = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if self.support.len() < self.dim() { m.min(0.0) } else { m }
    }

    pub fn purity(&self) -> f64 {
        (&self.block * &self.block).trace().re
    }

    /// Checks trace, Hermiticity and positivity to [`DENSITY_TOL`].
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::TraceDrift { trace: tr.re, tolerance: DENSITY_TOL });
        }
        let h = self.hermiticity_defect();
        if h > DENSITY_TOL {
            return Err(Error::NotHermitian(h));
        }
        let m = self.min_eigenvalue();
        if m < -DENSITY_TOL {
            return Err(Error::Evolution(format!("density matrix has negative eigenvalue {m:e}")));
        }
        Ok(())
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, state: &QuantumState) -> Result<f64> {
        if self.layout.as_ref() != Some(state.layout()) {
            return Err(Error::LayoutMismatch);
        }
        let v: Vec<C64> = self.support.iter().map(|&i| state.amplitudes()[i]).collect();
        let mut acc = C64::new(0.0, 0.0);
        for (r, vr) in v.iter().enumerate() {
            for (c, vc) in v.iter().enumerate() {
                acc += vr.conj() * self.block[(r, c)] * vc;
            }
        }
        Ok(acc.re)
    }

    /// Population of basis states whose level on `factor` equals `level`.
    pub fn factor_population(&self, factor: usize, level: usize) -> f64 {
        let stride: usize = self.dims[factor + 1..].iter().product();
        self.support
            .iter()
            .enumerate()
            .filter(|(_, &i)| (i / stride) % self.dims[factor] == level)
            .map(|(k, _)| self.block[(k, k)].re)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (a, &i) in self.support.iter().enumerate() {
            for (b, &j) in self.support.iter().enumerate() {
                m[(i, j)] = self.block[(a, b)];
            }
        }
        m
    }

    /// Reduced matrix over the listed factors (kept in ascending factor order).
    pub fn partial_trace_factors(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = FactorSplit::new(&self.dims, keep)?;
        let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (pos, &i) in self.support.iter().enumerate() {
            let (k, t) = split.split(i);
            groups.entry(t).or_default().push((pos, k));
        }
        let mut out = DMatrix::zeros(split.kept_dim, split.kept_dim);
        for members in groups.values() {
            for &(p1, k1) in members {
                for &(p2, k2) in members {
                    out[(k1, k2)] += self.block[(p1, p2)];
                }
            }
        }
        DensityMatrix::from_dense(split.kept_dims, out)
    }

    /// Reduced matrix over the listed sites; requires a joint-space matrix.
    pub fn partial_trace(&self, keep: &[Site]) -> Result<DensityMatrix> {
        let layout = self.layout.ok_or_else(|| Error::Layout("reduced matrix has no site structure".into()))?;
        let factors = sites_to_factors(&layout, keep)?;
        self.partial_trace_factors(&factors)
    }
}

impl QuantumState {
    /// Reduced density matrix over the listed sites.
    pub fn partial_trace(&self, keep: &[Site]) -> Result<DensityMatrix> {
        let factors = sites_to_factors(self.layout(), keep)?;
        let split = FactorSplit::new(&self.layout().dims(), &factors)?;
        let mut groups: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
        for (i, a) in self.amplitudes().iter().enumerate() {
            if *a != C64::new(0.0, 0.0) {
                let (k, t) = split.split(i);
                groups.entry(t).or_default().push((k, *a));
            }
        }
        let mut out = DMatrix::zeros(split.kept_dim, split.kept_dim);
        for members in groups.values() {
            for &(k1, a1) in members {
                for &(k2, a2) in members {
                    out[(k1, k2)] += a1 * a2.conj();
                }
            }
        }
        DensityMatrix::from_dense(split.kept_dims, out)
    }
}

fn sites_to_factors(layout: &SystemLayout, keep: &[Site]) -> Result<Vec<usize>> {
    keep.iter().map(|&s| layout.factor_of(s)).collect()
}

struct FactorSplit {
    dims: Vec<usize>,
    keep_mask: Vec<bool>,
    kept_dims: Vec<usize>,
    kept_dim: usize,
}

impl FactorSplit {
    fn new(dims: &[usize], keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Site("partial trace needs at least one kept factor".into()));
        }
        let mut keep_mask = vec![false; dims.len()];
        for &f in keep {
            if f >= dims.len() {
                return Err(Error::Site(format!("factor {f} out of range")));
            }
            if keep_mask[f] {
                return Err(Error::Site(format!("factor {f} listed twice")));
            }
            keep_mask[f] = true;
        }
        let kept_dims: Vec<usize> = dims.iter().zip(&keep_mask).filter(|(_, k)| **k).map(|(d, _)| *d).collect();
        let kept_dim = kept_dims.iter().product();
        Ok(FactorSplit { dims: dims.to_vec(), keep_mask, kept_dims, kept_dim })
    }

    /// Flat index -> (index over kept factors, index over traced factors).
    fn split(&self, mut index: usize) -> (usize, usize) {
        let (mut k, mut t) = (0, 0);
        let (mut ks, mut ts) = (1, 1);
        for f in (0..self.dims.len()).rev() {
            let d = self.dims[f];
            let l = index % d;
            index /= d;
            if self.keep_mask[f] {
                k += l * ks;
                ks *= d;
            } else {
                t += l * ts;
                ts *= d;
            }
        }
        (k, t)
    }
}
