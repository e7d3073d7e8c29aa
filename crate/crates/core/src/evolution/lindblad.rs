//! Lindblad master equation on the reachable block of a density matrix.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ode::{dopri45, OdeOptions};
use super::subspace::Subspace;
use super::{EvolutionMode, EvolutionSpec, POSITIVITY_WARNING, TRACE_TOLERANCE};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug)]
pub struct LindbladOutcome {
    pub density: DensityMatrix,
    /// `|tr rho(T) - tr rho(0)|`.
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
    pub subspace_dim: usize,
}

pub fn evolve_lindblad(rho: &DensityMatrix, spec: &EvolutionSpec, collapse: &[OperatorMatrix]) -> Result<DensityMatrix> {
    Ok(evolve_lindblad_report(rho, spec, collapse)?.density)
}

/// `d rho/dt = -i[H, rho] + sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)`.
pub fn evolve_lindblad_report(
    rho: &DensityMatrix,
    spec: &EvolutionSpec,
    collapse: &[OperatorMatrix],
) -> Result<LindbladOutcome> {
    spec.validate()?;
    if spec.mode != EvolutionMode::Lindblad {
        log::debug!("evolve_lindblad called with a unitary-mode spec; integrating the master equation anyway");
    }
    let layout = *spec.generator.layout();
    if rho.layout() != Some(&layout) || collapse.iter().any(|l| l.layout() != &layout) {
        return Err(Error::LayoutMismatch);
    }
    let dim = layout.dim();
    let decay: Vec<CsrMatrix> = collapse.iter().map(|l| l.matrix().adjoint().matmul(l.matrix())).collect();
    let mut pattern = spec.generator.pattern();
    pattern.extend(collapse.iter().map(|l| l.matrix()));
    pattern.extend(decay.iter());
    let sub = Subspace::reachable(dim, rho.support(), &pattern);
    let k = sub.len();

    let mut rho0 = DMatrix::<C64>::zeros(k, k);
    let pos: Vec<usize> = rho.support().iter().map(|&i| sub.position(i).expect("support is in the closure")).collect();
    for (a, &pa) in pos.iter().enumerate() {
        for (b, &pb) in pos.iter().enumerate() {
            rho0[(pa, pb)] = rho.block()[(a, b)];
        }
    }
    let tr0 = rho0.trace().re;

    let gen = spec.generator.restrict(&sub);
    let ls: Vec<CsrMatrix> = collapse.iter().map(|l| sub.restrict(l.matrix())).collect();
    let mut g = CsrMatrix::zeros(k, k);
    for d in &decay {
        g = g.add(&sub.restrict(d));
    }
    let g = g.scale(C64::new(0.5, 0.0));

    let opts = OdeOptions {
        rtol: spec.tolerance,
        atol: spec.tolerance,
        max_step: spec.step_bound(),
        min_step_fraction: 1e-14,
    };
    let mut x = DMatrix::<C64>::zeros(k, k);
    let mut tmp = DMatrix::<C64>::zeros(k, k);
    let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        // X = -i (H - i G) rho, with G = sum L^dag L / 2
        for j in 0..k {
            let col = &y[j * k..(j + 1) * k];
            let xc = &mut x.as_mut_slice()[j * k..(j + 1) * k];
            gen.apply(t, col, xc);
            for v in xc.iter_mut() {
                *v = C64::new(v.im, -v.re);
            }
            g.mul_vec_add(C64::new(-1.0, 0.0), col, xc);
        }
        // X + X^dag
        for j in 0..k {
            for i in 0..k {
                out[j * k + i] = x[(i, j)] + x[(j, i)].conj();
            }
        }
        // + sum L rho L^dag = L (L rho)^dag
        for l in &ls {
            for j in 0..k {
                let xc = &mut tmp.as_mut_slice()[j * k..(j + 1) * k];
                l.mul_vec_into(&y[j * k..(j + 1) * k], xc);
            }
            let lr_dag = tmp.adjoint();
            for j in 0..k {
                let col = lr_dag.column(j);
                let dst = &mut out[j * k..(j + 1) * k];
                l.mul_vec_add(C64::new(1.0, 0.0), col.as_slice(), dst);
            }
        }
    };
    let (y, stats) = dopri45(
        rho0.as_slice().to_vec(),
        spec.start_time,
        spec.start_time + spec.duration,
        &opts,
        rhs,
        |_, _| {},
    )?;
    let mut block = DMatrix::from_vec(k, k, y);
    // Remove the anti-Hermitian part left by the integrator.
    block = (&block + block.adjoint()) * C64::new(0.5, 0.0);
    let tr = block.trace().re;
    let trace_drift = (tr - tr0).abs();
    if trace_drift > TRACE_TOLERANCE {
        return Err(Error::TraceDrift { trace: tr, tolerance: TRACE_TOLERANCE });
    }
    let density = DensityMatrix::from_block(layout, sub.indices().to_vec(), block)?;
    let min_eigenvalue = density.min_eigenvalue();
    if min_eigenvalue < -POSITIVITY_WARNING {
        log::warn!("density matrix eigenvalue {min_eigenvalue:e} below -{POSITIVITY_WARNING:e}");
    }
    Ok(LindbladOutcome { density, trace_drift, min_eigenvalue, steps: stats.accepted, subspace_dim: k })
}
