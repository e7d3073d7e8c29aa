//! Exponential action `exp(-i H t) psi` for Hermitian `H`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// `H = V diag(w) V^dag`; applies `exp(-i H t)` for any `t` at the cost of
/// two dense matrix-vector products.
#[derive(Clone, Debug)]
pub struct EigenPropagator {
    vectors: DMatrix<C64>,
    values: DVector<f64>,
}

impl EigenPropagator {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        EigenPropagator { vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    /// Coordinates `V^dag psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(psi)
    }

    /// `V exp(-i w t) c`.
    pub fn propagate_coefficients(&self, c: &DVector<C64>, t: f64) -> DVector<C64> {
        let phased = DVector::from_fn(c.len(), |i, _| c[i] * C64::from_polar(1.0, -self.values[i] * t));
        &self.vectors * phased
    }

    pub fn apply(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        self.propagate_coefficients(&self.coefficients(psi), t)
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Dense `exp(-i H t)` for a small Hermitian matrix.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let p = EigenPropagator::new(h);
    let phases = DVector::from_fn(p.values.len(), |i, _| C64::from_polar(1.0, -p.values[i] * t));
    let scaled = DMatrix::from_fn(p.vectors.nrows(), p.vectors.ncols(), |r, c| p.vectors[(r, c)] * phases[c]);
    scaled * p.vectors.adjoint()
}

const KRYLOV_DIM: usize = 40;

/// Lanczos approximation of `exp(-i H t) psi` with adaptive substeps; the
/// per-substep error estimate is kept below `tol * |psi|`.
pub fn krylov_expm_apply(h: &CsrMatrix, psi: &[C64], t: f64, tol: f64) -> Result<Vec<C64>> {
    let n = psi.len();
    let mut v = psi.to_vec();
    if t == 0.0 || n == 0 {
        return Ok(v);
    }
    let norm_h = (0..n).map(|r| h.row(r).map(|(_, x)| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    if norm_h == 0.0 {
        return Ok(v);
    }
    let m_max = KRYLOV_DIM.min(n);
    let mut remaining = t.abs();
    let sign = t.signum();
    let mut dt = (10.0 / norm_h).min(remaining);
    let mut guard = 0usize;
    while remaining > 0.0 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Evolution("Krylov propagation did not converge".into()));
        }
        let beta = l2(&v);
        if beta == 0.0 {
            return Ok(v);
        }
        // Lanczos basis and tridiagonal coefficients
        let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|x| x / beta).collect()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut breakdown = false;
        for j in 0..m_max {
            h.mul_vec_into(&basis[j], &mut w);
            let a: C64 = dotc(&basis[j], &w);
            alpha.push(a.re);
            for (wi, bi) in w.iter_mut().zip(&basis[j]) {
                *wi -= bi * a.re;
            }
            if j > 0 {
                let b = betas[j - 1];
                for (wi, bi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= bi * b;
                }
            }
            // full reorthogonalization keeps the basis clean at this size
            for q in &basis {
                let c = dotc(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
            let b = l2(&w);
            betas.push(b);
            if b < 1e-14 * norm_h {
                breakdown = true;
                break;
            }
            if j + 1 < m_max {
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
        let m = alpha.len();
        let tri = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                C64::new(alpha[r], 0.0)
            } else if r + 1 == c {
                C64::new(betas[r], 0.0)
            } else if c + 1 == r {
                C64::new(betas[c], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        loop {
            let step = dt.min(remaining);
            let e = expm_hermitian(&tri, sign * step);
            // error estimate from the last Lanczos coefficient
            let err = if breakdown { 0.0 } else { betas[m - 1] * e[(m - 1, 0)].norm() };
            if err <= tol || step < 1e-300 {
                let mut out = vec![C64::new(0.0, 0.0); n];
                for (k, q) in basis.iter().enumerate().take(m) {
                    let c = e[(k, 0)] * beta;
                    for (o, qi) in out.iter_mut().zip(q) {
                        *o += qi * c;
                    }
                }
                v = out;
                remaining -= step;
                if err < 0.1 * tol {
                    dt = step * 1.5;
                }
                break;
            }
            dt = step * 0.5;
        }
    }
    Ok(v)
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        &m + m.adjoint()
    }

    #[test]
    fn eigen_matches_taylor_for_small_time() {
        let h = random_hermitian(6, 1);
        let t = 1e-3;
        let u = expm_hermitian(&h, t);
        let taylor = DMatrix::identity(6, 6) - &h * C64::new(0.0, t) - &h * &h * C64::new(t * t / 2.0, 0.0);
        assert!((u - taylor).norm() < 1e-8);
    }

    #[test]
    fn krylov_matches_eigen() {
        let h = random_hermitian(60, 7);
        let psi = DVector::from_fn(60, |i, _| C64::new((i as f64).sin(), (i as f64).cos()));
        let psi = &psi / C64::new(psi.norm(), 0.0);
        let exact = EigenPropagator::new(&h).apply(&psi, 3.0);
        let sparse = CsrMatrix::from_dense(&h);
        let approx = krylov_expm_apply(&sparse, psi.as_slice(), 3.0, 1e-12).unwrap();
        let diff: f64 = approx.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-9, "{diff}");
    }
}
