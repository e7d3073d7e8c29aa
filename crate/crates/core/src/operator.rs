//! Operators on the joint space and their embedding from local factors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::layout::{Cavity, Level, Site, SystemLayout};
use crate::sparse::CsrMatrix;
use crate::state::QuantumState;

/// Tolerance on `max|M - M^dag|` for operators flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Sparse operator on the joint space of a [`SystemLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    layout: SystemLayout,
    matrix: CsrMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps `matrix`; when `hermitian` is set the flag is verified.
    pub fn new(layout: SystemLayout, matrix: CsrMatrix, hermitian: bool) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: matrix.nrows().max(matrix.ncols()) });
        }
        if hermitian {
            let defect = matrix.hermiticity_defect();
            if defect >= HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
        }
        Ok(OperatorMatrix { layout, matrix, hermitian })
    }

    pub fn zero(layout: SystemLayout) -> Self {
        let dim = layout.dim();
        OperatorMatrix { layout, matrix: CsrMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn identity(layout: SystemLayout) -> Self {
        OperatorMatrix { layout, matrix: CsrMatrix::identity(layout.dim()), hermitian: true }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// Re-checks the matrix and sets the Hermitian flag if it qualifies.
    pub fn into_hermitian(self) -> Result<Self> {
        OperatorMatrix::new(self.layout, self.matrix, true)
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { layout: self.layout, matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, s: C64) -> Self {
        OperatorMatrix {
            layout: self.layout,
            matrix: self.matrix.scale(s),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        self.check_layout(other)?;
        Ok(OperatorMatrix {
            layout: self.layout,
            matrix: self.matrix.add(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &OperatorMatrix) -> Result<Self> {
        self.check_layout(other)?;
        Ok(OperatorMatrix { layout: self.layout, matrix: self.matrix.matmul(&other.matrix), hermitian: false })
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Ok(OperatorMatrix {
            layout: self.layout,
            matrix: ab.matrix.add_scaled(C64::new(-1.0, 0.0), &ba.matrix),
            hermitian: false,
        })
    }

    /// `self |psi>`. The result is generally not normalized.
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.layout() != &self.layout {
            return Err(Error::LayoutMismatch);
        }
        let out = self.matrix.mul_vec(state.amplitudes().as_slice());
        Ok(QuantumState::from_vec_unchecked(self.layout, out))
    }

    /// `<psi| self |psi>`.
    pub fn expectation(&self, state: &QuantumState) -> Result<C64> {
        let h_psi = self.apply(state)?;
        Ok(state.amplitudes().dotc(h_psi.amplitudes()))
    }

    fn check_layout(&self, other: &OperatorMatrix) -> Result<()> {
        if self.layout != other.layout {
            Err(Error::LayoutMismatch)
        } else {
            Ok(())
        }
    }
}

/// Local `|to><from|` on a factor of dimension `dim`.
pub fn transition(dim: usize, to: usize, from: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

/// `|to><from|` between qudit or coupler levels.
pub fn level_transition(dim: usize, to: Level, from: Level) -> DMatrix<C64> {
    transition(dim, to.index(), from.index())
}

/// Truncated annihilation operator on a Fock space with photon numbers `0..=cutoff`.
pub fn local_annihilation(cutoff: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Embeds a product of local operators, one per listed factor, with identity
/// on every other factor. Factors must be distinct.
pub fn embed_product(layout: &SystemLayout, locals: &[(usize, &DMatrix<C64>)]) -> Result<CsrMatrix> {
    let dims = layout.dims();
    let strides = layout.strides();
    for (i, &(f, m)) in locals.iter().enumerate() {
        if f >= dims.len() {
            return Err(Error::Site(format!("factor {f} out of range")));
        }
        if m.nrows() != dims[f] || m.ncols() != dims[f] {
            return Err(Error::Dimension { expected: dims[f], got: m.nrows().max(m.ncols()) });
        }
        if locals[..i].iter().any(|&(g, _)| g == f) {
            return Err(Error::Site(format!("factor {f} listed twice")));
        }
    }
    // Non-zero (to, from, value) transitions per local factor, indexed by `from`.
    let columns: Vec<Vec<Vec<(usize, C64)>>> = locals
        .iter()
        .map(|&(f, m)| {
            (0..dims[f])
                .map(|from| {
                    (0..dims[f])
                        .filter_map(|to| {
                            let v = m[(to, from)];
                            (v != C64::new(0.0, 0.0)).then_some((to, v))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let dim = layout.dim();
    let mut triplets = Vec::new();
    let mut partial: Vec<(usize, C64)> = Vec::new();
    let mut next: Vec<(usize, C64)> = Vec::new();
    for col in 0..dim {
        partial.clear();
        partial.push((col, C64::new(1.0, 0.0)));
        for (k, &(f, _)) in locals.iter().enumerate() {
            let from = (col / strides[f]) % dims[f];
            next.clear();
            for &(row, amp) in &partial {
                for &(to, v) in &columns[k][from] {
                    let shifted = row + to * strides[f] - from * strides[f];
                    next.push((shifted, amp * v));
                }
            }
            std::mem::swap(&mut partial, &mut next);
            if partial.is_empty() {
                break;
            }
        }
        triplets.extend(partial.iter().map(|&(row, v)| (row, col, v)));
    }
    Ok(CsrMatrix::from_triplets(dim, dim, triplets))
}

/// Embeds a local operator on a qudit or the coupler into the joint space.
pub fn embed_qudit_op(layout: &SystemLayout, site: Site, local: &DMatrix<C64>) -> Result<OperatorMatrix> {
    if matches!(site, Site::Mode(_)) {
        return Err(Error::Site(format!("{site} is a cavity mode; use the mode operators")));
    }
    let factor = layout.factor_of(site)?;
    let matrix = embed_product(layout, &[(factor, local)])?;
    let hermitian = (local - local.adjoint()).iter().all(|v| v.norm() < HERMITIAN_TOL);
    OperatorMatrix::new(*layout, matrix, hermitian)
}

/// Annihilation operator of the mode in `cavity`, truncated at its cutoff.
pub fn mode_annihilation(layout: &SystemLayout, cavity: Cavity) -> Result<OperatorMatrix> {
    let factor = layout.factor_of(Site::Mode(cavity))?;
    let a = local_annihilation(layout.cutoff(cavity));
    OperatorMatrix::new(*layout, embed_product(layout, &[(factor, &a)])?, false)
}

pub fn mode_creation(layout: &SystemLayout, cavity: Cavity) -> Result<OperatorMatrix> {
    Ok(mode_annihilation(layout, cavity)?.adjoint())
}

pub fn number_operator(layout: &SystemLayout, cavity: Cavity) -> Result<OperatorMatrix> {
    let factor = layout.factor_of(Site::Mode(cavity))?;
    let cutoff = layout.cutoff(cavity);
    let n = DMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    OperatorMatrix::new(*layout, embed_product(layout, &[(factor, &n)])?, true)
}
