//! Time evolution of pure states and density matrices.
//!
//! Every call first restricts the problem to the subspace reachable from the
//! initial support (see [`subspace`]). Static generators are then exponentiated
//! exactly through an eigendecomposition when the restricted dimension is at
//! most [`DENSE_LIMIT`], and with a Lanczos propagator above it. The
//! time-dependent dispersive drive is integrated with Dormand-Prince 5(4);
//! if the norm drifts by more than [`NORM_TOL`] the segment is redone with a
//! fourth-order Magnus integrator, which is unitary by construction.

pub mod expm;
pub mod lindblad;
pub mod ode;
pub mod subspace;
pub mod trajectory;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::DispersiveDrive;
use crate::layout::SystemLayout;
use crate::operator::OperatorMatrix;
use crate::sparse::CsrMatrix;
use crate::state::{QuantumState, NORM_TOL};

pub use expm::{expm_hermitian, krylov_expm_apply, EigenPropagator};
pub use lindblad::{evolve_lindblad, evolve_lindblad_report, LindbladOutcome};
pub use subspace::Subspace;
pub use trajectory::{Tracked, TrajectoryRecorder, TrajectoryRow};

/// Largest restricted dimension exponentiated through a dense eigendecomposition.
pub const DENSE_LIMIT: usize = 4096;
pub const DEFAULT_UNITARY_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_LINDBLAD_TOLERANCE: f64 = 1e-8;
/// Lindblad runs fail when the trace moves by more than this.
pub const TRACE_TOLERANCE: f64 = 1e-7;
/// Lindblad runs warn when the smallest eigenvalue falls below minus this.
pub const POSITIVITY_WARNING: f64 = 1e-6;
/// Steps per radian of the fastest rotating phase of a time-dependent generator.
pub const STEPS_PER_RADIAN: f64 = 50.0;

#[derive(Clone, Debug)]
pub enum Generator {
    Static(OperatorMatrix),
    /// The explicitly time-dependent dispersive Hamiltonian.
    Dispersive(DispersiveDrive),
}

impl Generator {
    pub fn layout(&self) -> &SystemLayout {
        match self {
            Generator::Static(h) => h.layout(),
            Generator::Dispersive(d) => d.layout(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Generator::Dispersive(_))
    }

    /// The Hamiltonian at time `t`.
    pub fn at(&self, t: f64) -> OperatorMatrix {
        match self {
            Generator::Static(h) => h.clone(),
            Generator::Dispersive(d) => d.at(t),
        }
    }

    /// Matrices whose non-zero pattern bounds the dynamics.
    fn pattern(&self) -> Vec<&CsrMatrix> {
        match self {
            Generator::Static(h) => vec![h.matrix()],
            Generator::Dispersive(d) => {
                let (l, r) = d.lowering_parts();
                vec![l, r]
            }
        }
    }

    fn restrict(&self, sub: &Subspace) -> Restricted {
        match self {
            Generator::Static(h) => Restricted::Static(sub.restrict(h.matrix())),
            Generator::Dispersive(d) => {
                let (l, r) = d.lowering_parts();
                let l = sub.restrict(l);
                let r = sub.restrict(r);
                Restricted::Driven {
                    ld: l.adjoint(),
                    rd: r.adjoint(),
                    l,
                    r,
                    delta: d.delta(),
                    delta_prime: d.delta_prime(),
                }
            }
        }
    }
}

/// A generator restricted to an invariant subspace.
#[derive(Clone, Debug)]
pub(crate) enum Restricted {
    Static(CsrMatrix),
    Driven { l: CsrMatrix, ld: CsrMatrix, r: CsrMatrix, rd: CsrMatrix, delta: f64, delta_prime: f64 },
}

impl Restricted {
    /// `out = H(t) x`.
    pub(crate) fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        match self {
            Restricted::Static(h) => h.mul_vec_into(x, out),
            Restricted::Driven { l, ld, r, rd, delta, delta_prime } => {
                out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
                let pl = C64::from_polar(1.0, delta * t);
                let pr = C64::from_polar(1.0, delta_prime * t);
                l.mul_vec_add(pl, x, out);
                ld.mul_vec_add(pl.conj(), x, out);
                r.mul_vec_add(pr, x, out);
                rd.mul_vec_add(pr.conj(), x, out);
            }
        }
    }

    fn dense_at(&self, t: f64) -> DMatrix<C64> {
        match self {
            Restricted::Static(h) => h.to_dense(),
            Restricted::Driven { l, ld, r, rd, delta, delta_prime } => {
                let pl = C64::from_polar(1.0, delta * t);
                let pr = C64::from_polar(1.0, delta_prime * t);
                l.scale(pl).add(&ld.scale(pl.conj())).add(&r.scale(pr)).add(&rd.scale(pr.conj())).to_dense()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionMode {
    Unitary,
    Lindblad,
}

#[derive(Clone, Debug)]
pub struct EvolutionSpec {
    pub generator: Generator,
    /// Seconds.
    pub duration: f64,
    /// Value of `t` at the start, for the phases of a time-dependent generator.
    pub start_time: f64,
    pub mode: EvolutionMode,
    /// Relative error target of the adaptive integrators.
    pub tolerance: f64,
    /// Step bound for time-dependent generators; defaults to `1 / (50 max(delta, delta'))`.
    pub max_step: Option<f64>,
}

impl EvolutionSpec {
    pub fn unitary(generator: Generator, duration: f64) -> Self {
        EvolutionSpec {
            generator,
            duration,
            start_time: 0.0,
            mode: EvolutionMode::Unitary,
            tolerance: DEFAULT_UNITARY_TOLERANCE,
            max_step: None,
        }
    }

    pub fn lindblad(generator: Generator, duration: f64) -> Self {
        EvolutionSpec {
            mode: EvolutionMode::Lindblad,
            tolerance: DEFAULT_LINDBLAD_TOLERANCE,
            ..EvolutionSpec::unitary(generator, duration)
        }
    }

    pub fn starting_at(mut self, t: f64) -> Self {
        self.start_time = t;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    /// Upper bound on the step of the adaptive integrators.
    pub fn step_bound(&self) -> f64 {
        let limit = match &self.generator {
            Generator::Dispersive(d) => 1.0 / (STEPS_PER_RADIAN * d.max_detuning()),
            Generator::Static(_) => f64::INFINITY,
        };
        self.max_step.unwrap_or(limit).min(limit).min(self.duration.max(f64::MIN_POSITIVE))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Evolution(format!("duration must be finite and non-negative (got {})", self.duration)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Evolution(format!("tolerance must be positive (got {})", self.tolerance)));
        }
        if let (Generator::Dispersive(d), Some(h)) = (&self.generator, self.max_step) {
            let limit = 1.0 / (STEPS_PER_RADIAN * d.max_detuning());
            if h > limit {
                return Err(Error::Evolution(format!(
                    "max_step {h:e} s exceeds 1/(50 max(delta, delta')) = {limit:e} s"
                )));
            }
        }
        if let Generator::Static(h) = &self.generator {
            if !h.is_hermitian() {
                return Err(Error::NotHermitian(h.hermiticity_defect()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Eigen,
    Krylov,
    DormandPrince,
    Magnus4,
}

#[derive(Clone, Debug)]
pub struct UnitaryOutcome {
    pub state: QuantumState,
    /// `| |psi(T)| - |psi(0)| |`.
    pub norm_drift: f64,
    pub method: Method,
    pub steps: usize,
    pub subspace_dim: usize,
}

/// Receives `(t, basis indices, amplitudes)` during an evolution.
///
/// Static generators are sampled at `samples + 1` evenly spaced times;
/// time-dependent ones at every accepted integrator step. If a segment is
/// redone (Magnus fallback), times restart from the segment start.
pub struct Observer<'a> {
    pub samples: usize,
    pub callback: &'a mut dyn FnMut(f64, &[usize], &[C64]),
}

pub fn evolve_unitary(state: &QuantumState, spec: &EvolutionSpec) -> Result<QuantumState> {
    Ok(evolve_unitary_observed(state, spec, None)?.state)
}

pub fn evolve_unitary_observed(
    state: &QuantumState,
    spec: &EvolutionSpec,
    mut observer: Option<Observer<'_>>,
) -> Result<UnitaryOutcome> {
    spec.validate()?;
    let layout = *spec.generator.layout();
    if state.layout() != &layout {
        return Err(Error::LayoutMismatch);
    }
    let sub = Subspace::reachable(layout.dim(), &state.support(), &spec.generator.pattern());
    let psi0: Vec<C64> = sub.indices().iter().map(|&i| state.amplitudes()[i]).collect();
    let n0 = l2(&psi0);
    let t0 = spec.start_time;

    let (psi, method, steps) = if spec.duration == 0.0 {
        if let Some(obs) = observer.as_mut() {
            (obs.callback)(t0, sub.indices(), &psi0);
        }
        (psi0, Method::Eigen, 0)
    } else {
        match spec.generator.restrict(&sub) {
            Restricted::Static(h) if sub.len() <= DENSE_LIMIT => {
                let prop = EigenPropagator::new(&h.to_dense());
                let c = prop.coefficients(&DVector::from_vec(psi0));
                if let Some(obs) = observer.as_mut() {
                    let samples = obs.samples.max(1);
                    for s in 0..samples {
                        let t = spec.duration * s as f64 / samples as f64;
                        let v = prop.propagate_coefficients(&c, t);
                        (obs.callback)(t0 + t, sub.indices(), v.as_slice());
                    }
                }
                let v = prop.propagate_coefficients(&c, spec.duration);
                if let Some(obs) = observer.as_mut() {
                    (obs.callback)(t0 + spec.duration, sub.indices(), v.as_slice());
                }
                (v.as_slice().to_vec(), Method::Eigen, 1)
            }
            Restricted::Static(h) => {
                let samples = observer.as_ref().map_or(1, |o| o.samples.max(1));
                let mut v = psi0;
                for s in 0..samples {
                    if let Some(obs) = observer.as_mut() {
                        (obs.callback)(t0 + spec.duration * s as f64 / samples as f64, sub.indices(), &v);
                    }
                    v = krylov_expm_apply(&h, &v, spec.duration / samples as f64, spec.tolerance)?;
                }
                if let Some(obs) = observer.as_mut() {
                    (obs.callback)(t0 + spec.duration, sub.indices(), &v);
                }
                (v, Method::Krylov, samples)
            }
            driven => integrate_driven(&driven, psi0, n0, spec, &sub, observer.as_mut())?,
        }
    };

    let mut full = vec![C64::new(0.0, 0.0); layout.dim()];
    for (&i, a) in sub.indices().iter().zip(&psi) {
        full[i] = *a;
    }
    let norm_drift = (l2(&psi) - n0).abs();
    Ok(UnitaryOutcome {
        state: QuantumState::from_vec_unchecked(layout, full),
        norm_drift,
        method,
        steps,
        subspace_dim: sub.len(),
    })
}

fn integrate_driven(
    gen: &Restricted,
    psi0: Vec<C64>,
    n0: f64,
    spec: &EvolutionSpec,
    sub: &Subspace,
    mut observer: Option<&mut Observer<'_>>,
) -> Result<(Vec<C64>, Method, usize)> {
    let t0 = spec.start_time;
    let t1 = t0 + spec.duration;
    let max_step = spec.step_bound();
    let opts = ode::OdeOptions {
        rtol: spec.tolerance,
        atol: spec.tolerance,
        max_step,
        min_step_fraction: 1e-14,
    };
    let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        gen.apply(t, y, out);
        for o in out.iter_mut() {
            *o = C64::new(o.im, -o.re); // -i * o
        }
    };
    let dp = ode::dopri45(psi0.clone(), t0, t1, &opts, rhs, |t, y| {
        if let Some(obs) = observer.as_mut() {
            (obs.callback)(t, sub.indices(), y);
        }
    });
    if let Ok((psi, stats)) = &dp {
        if (l2(psi) - n0).abs() <= NORM_TOL {
            return Ok((psi.clone(), Method::DormandPrince, stats.accepted));
        }
        log::warn!(
            "adaptive integration drifted the norm by {:e}; redoing the segment with a Magnus integrator",
            (l2(psi) - n0).abs()
        );
    } else if let Err(e) = &dp {
        log::warn!("adaptive integration failed ({e}); redoing the segment with a Magnus integrator");
    }
    // Fourth-order Magnus with two Gauss points.
    let steps = (spec.duration / max_step).ceil().max(1.0) as usize;
    let h = spec.duration / steps as f64;
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    let c2 = 0.5 + 3f64.sqrt() / 6.0;
    let mut v = DVector::from_vec(psi0);
    if let Some(obs) = observer.as_mut() {
        (obs.callback)(t0, sub.indices(), v.as_slice());
    }
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let h1 = gen.dense_at(t + c1 * h);
        let h2 = gen.dense_at(t + c2 * h);
        let comm = &h2 * &h1 - &h1 * &h2;
        let k = (&h1 + &h2) * C64::new(h / 2.0, 0.0) - comm * C64::new(0.0, 3f64.sqrt() * h * h / 12.0);
        v = expm_hermitian(&k, 1.0) * v;
        if let Some(obs) = observer.as_mut() {
            (obs.callback)(t + h, sub.indices(), v.as_slice());
        }
    }
    Ok((v.as_slice().to_vec(), Method::Magnus4, steps))
}

/// The dispersive step through the static detuned frame: maps the
/// interaction-picture state at `spec.start_time` into the frame, evolves
/// under `H0 + V` and maps back.
pub fn evolve_detuned_frame(state: &QuantumState, drive: &DispersiveDrive, start_time: f64, duration: f64) -> Result<QuantumState> {
    let h0 = drive.frame_generator();
    let phase = |psi: &QuantumState, t: f64| -> QuantumState {
        let diag = h0.matrix();
        let amps: Vec<C64> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * C64::from_polar(1.0, diag.get(i, i).re * t))
            .collect();
        QuantumState::from_vec_unchecked(*psi.layout(), amps)
    };
    let in_frame = phase(state, -start_time);
    let spec = EvolutionSpec::unitary(Generator::Static(drive.detuned_frame_hamiltonian()), duration);
    let evolved = evolve_unitary(&in_frame, &spec)?;
    Ok(phase(&evolved, start_time + duration))
}

/// `|<oracle|state>|^2`, clamped to `[0, 1]`.
pub fn checkpoint_fidelity(state: &QuantumState, oracle: &QuantumState) -> Result<f64> {
    Ok(state.inner(oracle)?.norm_sqr().clamp(0.0, 1.0))
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{h_resonant_ef, h_resonant_ge};
    use crate::layout::{build_layout, Cavity, Site};
    use std::f64::consts::PI;

    #[test]
    fn zero_duration_is_identity() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let h = h_resonant_ge(&l, Cavity::L, Site::Coupler, 1e8).unwrap();
        let psi = QuantumState::basis(l, 17);
        assert_eq!(evolve_unitary(&psi, &EvolutionSpec::unitary(Generator::Static(h), 0.0)).unwrap(), psi);
    }

    #[test]
    fn rejects_non_hermitian_static_generator() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let a = crate::operator::mode_annihilation(&l, Cavity::L).unwrap();
        let psi = QuantumState::basis(l, 0);
        assert!(evolve_unitary(&psi, &EvolutionSpec::unitary(Generator::Static(a), 1.0)).is_err());
    }

    #[test]
    fn ef_half_swap() {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let mu = 2.0 * PI * 70e6;
        let h = h_resonant_ef(&l, Cavity::L, Site::Left(1), mu).unwrap();
        let f0 = QuantumState::basis(l, l.index_of(&[2, 0, 0, 0, 0]).unwrap());
        let out = evolve_unitary(&f0, &EvolutionSpec::unitary(Generator::Static(h), PI / (2.0 * mu))).unwrap();
        let e1 = l.index_of(&[1, 0, 0, 1, 0]).unwrap();
        assert!((out.amplitudes()[e1] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let l = build_layout(2, 2, 3, 3).unwrap();
        let p = crate::params::PhysicalParams::transmon_preset();
        let d = DispersiveDrive::new(&l, &p).unwrap();
        let mut spec = EvolutionSpec::unitary(Generator::Dispersive(d), 1e-9);
        assert!(spec.validate().is_ok());
        spec.max_step = Some(1.0);
        assert!(spec.validate().is_err());
        spec.max_step = None;
        spec.duration = -1.0;
        assert!(spec.validate().is_err());
    }
}
