//! Pure states on the joint space and the snapshot file format.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{SystemLayout, BASIS_ORDER_VERSION};

/// Tolerance on `| ||psi|| - 1 |` for states produced by unitary evolution.
pub const NORM_TOL: f64 = 1e-9;

/// Dense amplitude vector over the basis of a [`SystemLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: SystemLayout,
    amplitudes: DVector<C64>,
}

impl QuantumState {
    pub fn basis(layout: SystemLayout, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(layout.dim());
        amplitudes[index] = C64::new(1.0, 0.0);
        QuantumState { layout, amplitudes }
    }

    pub fn from_amplitudes(layout: SystemLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Dimension { expected: layout.dim(), got: amplitudes.len() });
        }
        Ok(QuantumState { layout, amplitudes })
    }

    pub(crate) fn from_vec_unchecked(layout: SystemLayout, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.dim());
        QuantumState { layout, amplitudes: DVector::from_vec(amplitudes) }
    }

    /// Tensor product of one local vector per factor, in layout order.
    pub fn product(layout: SystemLayout, locals: &[DVector<C64>]) -> Result<Self> {
        let dims = layout.dims();
        if locals.len() != dims.len() {
            return Err(Error::Dimension { expected: dims.len(), got: locals.len() });
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (v, &d) in locals.iter().zip(&dims) {
            if v.len() != d {
                return Err(Error::Dimension { expected: d, got: v.len() });
            }
            let mut next = Vec::with_capacity(amps.len() * d);
            for a in &amps {
                next.extend(v.iter().map(|x| a * x));
            }
            amps = next;
        }
        Ok(QuantumState::from_vec_unchecked(layout, amps))
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Amplitudes("cannot normalize a zero or non-finite vector".into()));
        }
        self.amplitudes /= C64::new(n, 0.0);
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `a * self + b * other`.
    pub fn superpose(&self, a: C64, other: &QuantumState, b: C64) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(QuantumState { layout: self.layout, amplitudes: &self.amplitudes * a + &other.amplitudes * b })
    }

    /// Total population of basis states whose level on `factor` equals `level`.
    pub fn factor_population(&self, factor: usize, level: usize) -> f64 {
        let dims = self.layout.dims();
        let stride = self.layout.strides()[factor];
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride) % dims[factor] == level)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Indices of non-zero amplitudes.
    pub fn support(&self) -> Vec<usize> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != C64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Removes the global phase: the largest-magnitude amplitude (first one on
    /// ties) becomes real and positive.
    pub fn canonicalize_phase(&self) -> Self {
        let mut best = C64::new(0.0, 0.0);
        for a in self.amplitudes.iter() {
            if a.norm() > best.norm() * (1.0 + 1e-12) {
                best = *a;
            }
        }
        if best.norm() == 0.0 {
            return self.clone();
        }
        let phase = best.conj() / best.norm();
        QuantumState { layout: self.layout, amplitudes: &self.amplitudes * phase }
    }

    pub fn to_snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            basis_order_version: BASIS_ORDER_VERSION,
            basis_order: BASIS_ORDER_DESCRIPTION.to_string(),
            layout: self.layout,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_snapshot(snapshot: &StateSnapshot) -> Result<Self> {
        if snapshot.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unexpected format tag `{}`", snapshot.format)));
        }
        if snapshot.basis_order_version != BASIS_ORDER_VERSION {
            return Err(Error::Snapshot(format!(
                "basis ordering version {} is not supported (expected {BASIS_ORDER_VERSION})",
                snapshot.basis_order_version
            )));
        }
        let layout = SystemLayout::new(
            snapshot.layout.n_left,
            snapshot.layout.n_right,
            snapshot.layout.cutoff_l,
            snapshot.layout.cutoff_r,
        )?;
        let amps = snapshot.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect::<Vec<_>>();
        QuantumState::from_amplitudes(layout, DVector::from_vec(amps))
    }

    pub fn to_snapshot_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    pub fn from_snapshot_json(text: &str) -> Result<Self> {
        QuantumState::from_snapshot(&serde_json::from_str(text)?)
    }
}

pub const SNAPSHOT_FORMAT: &str = "ghz-transfer/state-snapshot";
const BASIS_ORDER_DESCRIPTION: &str =
    "q1..qn (g,e,f), A (g,e), q1'..qn' (g,e,f), mode a (0..cutoff_l), mode b (0..cutoff_r); slowest to fastest";

/// JSON container for a state: layout descriptor, basis-ordering tag and
/// `[re, im]` amplitude pairs in basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub format: String,
    pub basis_order_version: u32,
    pub basis_order: String,
    pub layout: SystemLayout,
    pub amplitudes: Vec<[f64; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::build_layout;
    use proptest::prelude::*;

    #[test]
    fn product_state_ordering() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let e = |d: usize, i: usize| DVector::from_fn(d, |k, _| C64::new((k == i) as u8 as f64, 0.0));
        let s = QuantumState::product(l, &[e(3, 2), e(2, 1), e(3, 0), e(4, 1), e(4, 3)]).unwrap();
        assert_eq!(s, QuantumState::basis(l, l.index_of(&[2, 1, 0, 1, 3]).unwrap()));
    }

    #[test]
    fn phase_canonicalization() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let s = QuantumState::basis(l, 5).superpose(C64::new(0.0, -0.6), &QuantumState::basis(l, 9), C64::new(0.8, 0.0)).unwrap();
        let rotated = QuantumState::basis(l, 5).superpose(C64::new(0.6, 0.0), &QuantumState::basis(l, 9), C64::new(0.0, 0.8)).unwrap();
        let a = s.canonicalize_phase();
        let b = rotated.canonicalize_phase();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-15);
        assert!(a.amplitudes()[9].im.abs() < 1e-16 && a.amplitudes()[9].re > 0.0);
    }

    #[test]
    fn snapshot_rejects_foreign_ordering() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let mut snap = QuantumState::basis(l, 0).to_snapshot();
        snap.basis_order_version = 99;
        assert!(QuantumState::from_snapshot(&snap).is_err());
        let mut snap = QuantumState::basis(l, 0).to_snapshot();
        snap.amplitudes.pop();
        assert!(QuantumState::from_snapshot(&snap).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn snapshot_round_trip(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 288)) {
            let l = build_layout(1, 1, 3, 3).unwrap();
            let amps = DVector::from_iterator(288, v.into_iter().map(|(a, b)| C64::new(a, b)));
            let s = QuantumState::from_amplitudes(l, amps).unwrap();
            let text = s.to_snapshot_json().unwrap();
            prop_assert_eq!(QuantumState::from_snapshot_json(&text).unwrap(), s);
        }
    }
}
