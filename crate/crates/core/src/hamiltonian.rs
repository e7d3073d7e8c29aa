//! Hamiltonians of the transfer protocol, in the interaction picture used to
//! describe each step, and the decoherence channels.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::layout::{Cavity, Level, Site, SystemLayout, COUPLER_DIM, QUDIT_DIM};
use crate::operator::{embed_product, level_transition, local_annihilation, OperatorMatrix};
use crate::params::{Decoherence, PhysicalParams, QubitLifetimes};
use crate::sparse::CsrMatrix;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Spectator qubits of `cavity`: 2..n on the left, 2'..n' on the right.
pub fn spectators(layout: &SystemLayout, cavity: Cavity) -> Vec<Site> {
    match cavity {
        Cavity::L => (2..=layout.n_left).map(Site::Left).collect(),
        Cavity::R => (2..=layout.n_right).map(Site::Right).collect(),
    }
}

fn require_spectators(layout: &SystemLayout) -> Result<()> {
    if layout.n_left < 2 || layout.n_right < 2 {
        return Err(Error::Site(format!(
            "the dispersive step needs spectator qubits in both cavities (n >= 2), layout is {layout}"
        )));
    }
    Ok(())
}

fn site_dim(site: Site) -> usize {
    if site == Site::Coupler {
        COUPLER_DIM
    } else {
        QUDIT_DIM
    }
}

/// `coupling * (c^dag |lo><hi| + c |hi><lo|)` for the mode `c` of `cavity`.
fn jaynes_cummings(
    layout: &SystemLayout,
    cavity: Cavity,
    site: Site,
    lo: Level,
    hi: Level,
    coupling: f64,
) -> Result<OperatorMatrix> {
    let mode = layout.factor_of(Site::Mode(cavity))?;
    let qf = layout.factor_of(site)?;
    let a = local_annihilation(layout.cutoff(cavity));
    let a_dag = a.adjoint();
    let lower = level_transition(site_dim(site), lo, hi);
    let raise = level_transition(site_dim(site), hi, lo);
    let emit = embed_product(layout, &[(qf, &lower), (mode, &a_dag)])?;
    let absorb = embed_product(layout, &[(qf, &raise), (mode, &a)])?;
    OperatorMatrix::new(*layout, emit.add(&absorb).scale(real(coupling)), true)
}

/// Resonant coupling of the e-f transition of `qubit` to the mode of `cavity`.
pub fn h_resonant_ef(layout: &SystemLayout, cavity: Cavity, qubit: Site, coupling: f64) -> Result<OperatorMatrix> {
    match qubit {
        Site::Coupler => return Err(Error::Site("the coupler has no f level".into())),
        Site::Mode(_) => return Err(Error::Site(format!("{qubit} is a cavity mode, not a qubit"))),
        _ => {}
    }
    if qubit.cavity() != Some(cavity) {
        return Err(Error::Site(format!("{qubit} does not sit in cavity {cavity}")));
    }
    jaynes_cummings(layout, cavity, qubit, Level::E, Level::F, coupling)
}

/// Resonant coupling of the g-e transition of a qubit or the coupler.
pub fn h_resonant_ge(layout: &SystemLayout, cavity: Cavity, site: Site, coupling: f64) -> Result<OperatorMatrix> {
    if let Site::Mode(_) = site {
        return Err(Error::Site(format!("{site} is a cavity mode, not a qubit")));
    }
    if site.is_qudit() && site.cavity() != Some(cavity) {
        return Err(Error::Site(format!("{site} does not sit in cavity {cavity}")));
    }
    jaynes_cummings(layout, cavity, site, Level::G, Level::E, coupling)
}

/// `sum_l coupling * c |f>_l<e|` over the spectators of `cavity`.
fn dispersive_lowering(layout: &SystemLayout, cavity: Cavity, coupling: f64) -> Result<CsrMatrix> {
    let dim = layout.dim();
    let mode = layout.factor_of(Site::Mode(cavity))?;
    let a = local_annihilation(layout.cutoff(cavity));
    let fe = level_transition(QUDIT_DIM, Level::F, Level::E);
    let mut acc = CsrMatrix::zeros(dim, dim);
    for s in spectators(layout, cavity) {
        let qf = layout.factor_of(s)?;
        acc = acc.add(&embed_product(layout, &[(qf, &fe), (mode, &a)])?);
    }
    Ok(acc.scale(real(coupling)))
}

fn spectator_level_sum(layout: &SystemLayout, level: Level, weight_l: f64, weight_r: f64) -> Result<CsrMatrix> {
    let dim = layout.dim();
    let proj = level_transition(QUDIT_DIM, level, level);
    let mut acc = CsrMatrix::zeros(dim, dim);
    for (cavity, w) in [(Cavity::L, weight_l), (Cavity::R, weight_r)] {
        for s in spectators(layout, cavity) {
            let qf = layout.factor_of(s)?;
            acc = acc.add_scaled(real(w), &embed_product(layout, &[(qf, &proj)])?);
        }
    }
    Ok(acc)
}

/// The explicitly time-dependent dispersive Hamiltonian of the phase step,
/// `H(t) = sum_l mu (e^{i delta t} a |f>_l<e| + h.c.) + (primed, mode b)`.
#[derive(Clone, Debug)]
pub struct DispersiveDrive {
    layout: SystemLayout,
    lower_l: CsrMatrix,
    lower_r: CsrMatrix,
    delta: f64,
    delta_prime: f64,
}

impl DispersiveDrive {
    pub fn new(layout: &SystemLayout, params: &PhysicalParams) -> Result<Self> {
        require_spectators(layout)?;
        Ok(DispersiveDrive {
            layout: *layout,
            lower_l: dispersive_lowering(layout, Cavity::L, params.mu)?,
            lower_r: dispersive_lowering(layout, Cavity::R, params.mu_prime)?,
            delta: params.delta,
            delta_prime: params.delta_prime,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    /// Largest rotating-frame frequency, which bounds the integration step.
    pub fn max_detuning(&self) -> f64 {
        self.delta.abs().max(self.delta_prime.abs())
    }

    /// `sum mu a |f><e|` (cavity L) and its primed analog; `H(t)` is
    /// `e^{i delta t} L + e^{i delta' t} R + h.c.`.
    pub fn lowering_parts(&self) -> (&CsrMatrix, &CsrMatrix) {
        (&self.lower_l, &self.lower_r)
    }

    /// `H(t)` as a matrix.
    pub fn at(&self, t: f64) -> OperatorMatrix {
        let pl = C64::from_polar(1.0, self.delta * t);
        let pr = C64::from_polar(1.0, self.delta_prime * t);
        let m = self
            .lower_l
            .scale(pl)
            .add(&self.lower_l.adjoint().scale(pl.conj()))
            .add(&self.lower_r.scale(pr))
            .add(&self.lower_r.adjoint().scale(pr.conj()));
        // Hermitian by construction; the flag is verified by `new`.
        OperatorMatrix::new(self.layout, m, true).expect("dispersive drive is Hermitian")
    }

    /// `H0 = delta sum_l |f>_l<f| + delta' sum_l' |f>_l'<f|`. The drive is
    /// `e^{i H0 t} V e^{-i H0 t}` with `V = H(0)`.
    pub fn frame_generator(&self) -> OperatorMatrix {
        let m = spectator_level_sum(&self.layout, Level::F, self.delta, self.delta_prime).expect("layout sites");
        OperatorMatrix::new(self.layout, m, true).expect("diagonal")
    }

    /// Static Hamiltonian `H0 + V` of the detuned frame. A state evolved under
    /// it maps back to the interaction picture as `psi_I(t) = e^{i H0 t} psi(t)`.
    pub fn detuned_frame_hamiltonian(&self) -> OperatorMatrix {
        self.frame_generator().add(&self.at(0.0)).expect("same layout")
    }
}

/// `H(t)` of the dispersive step at a fixed time.
pub fn h_dispersive_full(layout: &SystemLayout, params: &PhysicalParams, time: f64) -> Result<OperatorMatrix> {
    Ok(DispersiveDrive::new(layout, params)?.at(time))
}

/// Second-order effective Hamiltonian: photon-number dependent Stark shifts
/// plus intra-cavity exchange between spectators.
pub fn h_dispersive_effective(layout: &SystemLayout, params: &PhysicalParams) -> Result<OperatorMatrix> {
    require_spectators(layout)?;
    let rates = params.effective_rates();
    let dim = layout.dim();
    let mut acc = CsrMatrix::zeros(dim, dim);
    let ff = level_transition(QUDIT_DIM, Level::F, Level::F);
    let ee = level_transition(QUDIT_DIM, Level::E, Level::E);
    let fe = level_transition(QUDIT_DIM, Level::F, Level::E);
    let ef = level_transition(QUDIT_DIM, Level::E, Level::F);
    for (cavity, lambda) in [(Cavity::L, rates.lambda), (Cavity::R, rates.lambda_prime)] {
        let mode = layout.factor_of(Site::Mode(cavity))?;
        let a = local_annihilation(layout.cutoff(cavity));
        let a_dag = a.adjoint();
        let a_adag = &a * &a_dag;
        let n = &a_dag * &a;
        let spec = spectators(layout, cavity);
        for &s in &spec {
            let qf = layout.factor_of(s)?;
            acc = acc.add_scaled(real(lambda), &embed_product(layout, &[(qf, &ff), (mode, &a_adag)])?);
            acc = acc.add_scaled(real(-lambda), &embed_product(layout, &[(qf, &ee), (mode, &n)])?);
        }
        for &l in &spec {
            for &k in &spec {
                if l == k {
                    continue;
                }
                let fl = layout.factor_of(l)?;
                let fk = layout.factor_of(k)?;
                acc = acc.add_scaled(real(lambda), &embed_product(layout, &[(fl, &fe), (fk, &ef)])?);
            }
        }
    }
    OperatorMatrix::new(*layout, acc, true)
}

/// Effective Hamiltonian restricted to states without spectator f population:
/// `-lambda sum_l |e>_l<e| a^dag a - lambda' sum_l' |e>_l'<e| b^dag b`.
pub fn h_dispersive_reduced(layout: &SystemLayout, params: &PhysicalParams) -> Result<OperatorMatrix> {
    let r = params.effective_rates();
    h_dispersive_reduced_rates(layout, r.lambda, r.lambda_prime)
}

/// [`h_dispersive_reduced`] with the rates given directly.
pub fn h_dispersive_reduced_rates(layout: &SystemLayout, lambda: f64, lambda_prime: f64) -> Result<OperatorMatrix> {
    require_spectators(layout)?;
    let dim = layout.dim();
    let ee = level_transition(QUDIT_DIM, Level::E, Level::E);
    let mut acc = CsrMatrix::zeros(dim, dim);
    for (cavity, rate) in [(Cavity::L, lambda), (Cavity::R, lambda_prime)] {
        let mode = layout.factor_of(Site::Mode(cavity))?;
        let a = local_annihilation(layout.cutoff(cavity));
        let n = a.adjoint() * &a;
        for s in spectators(layout, cavity) {
            let qf = layout.factor_of(s)?;
            acc = acc.add_scaled(real(-rate), &embed_product(layout, &[(qf, &ee), (mode, &n)])?);
        }
    }
    OperatorMatrix::new(*layout, acc, true)
}

/// Pure-dephasing rate `1/T2 - 1/(2 T1)`, clamped at zero.
pub fn pure_dephasing_rate(t1: f64, t2: f64) -> f64 {
    (1.0 / t2 - 0.5 / t1).max(0.0)
}

/// Lindblad operators for the lifetimes in `params.decoherence`: relaxation
/// e->g and f->e, pure dephasing of e and f, and photon loss from each cavity.
/// Channels with infinite lifetime or zero rate are omitted.
pub fn collapse_operators(layout: &SystemLayout, params: &PhysicalParams) -> Result<Vec<OperatorMatrix>> {
    let d = params
        .decoherence
        .as_ref()
        .ok_or_else(|| Error::Params("no decoherence rates given".into()))?;
    collapse_operators_for(layout, d)
}

pub fn collapse_operators_for(layout: &SystemLayout, d: &Decoherence) -> Result<Vec<OperatorMatrix>> {
    d.validate()?;
    let mut ops = Vec::new();
    let mut push_local = |site: Site, local: DMatrix<C64>, rate: f64| -> Result<()> {
        if rate > 0.0 && rate.is_finite() {
            let f = layout.factor_of(site)?;
            let m = embed_product(layout, &[(f, &local)])?.scale(real(rate.sqrt()));
            ops.push(OperatorMatrix::new(*layout, m, false)?);
        }
        Ok(())
    };
    let mut qubit = |site: Site, q: &QubitLifetimes, has_f: bool| -> Result<()> {
        let dim = site_dim(site);
        push_local(site, level_transition(dim, Level::G, Level::E), 1.0 / q.t1)?;
        push_local(site, level_transition(dim, Level::E, Level::E), 2.0 * pure_dephasing_rate(q.t1, q.t2))?;
        if has_f {
            push_local(site, level_transition(dim, Level::E, Level::F), 1.0 / q.t1f)?;
            push_local(site, level_transition(dim, Level::F, Level::F), 2.0 * pure_dephasing_rate(q.t1f, q.t2f))?;
        }
        Ok(())
    };
    for i in 1..=layout.n_left {
        qubit(Site::Left(i), &d.left, true)?;
    }
    qubit(Site::Coupler, &d.coupler, false)?;
    for i in 1..=layout.n_right {
        qubit(Site::Right(i), &d.right, true)?;
    }
    for (cavity, kappa) in [(Cavity::L, d.kappa_l), (Cavity::R, d.kappa_r)] {
        if kappa > 0.0 {
            let f = layout.factor_of(Site::Mode(cavity))?;
            let a = local_annihilation(layout.cutoff(cavity));
            let m = embed_product(layout, &[(f, &a)])?.scale(real(kappa.sqrt()));
            ops.push(OperatorMatrix::new(*layout, m, false)?);
        }
    }
    Ok(ops)
}
