use std::f64::consts::PI;

use ghz_transfer::evolution::{evolve_detuned_frame, evolve_lindblad_report, evolve_unitary_observed};
use ghz_transfer::hamiltonian::{collapse_operators, h_resonant_ef, h_resonant_ge, DispersiveDrive};
use ghz_transfer::params::Decoherence;
use ghz_transfer::runner::DispersiveRoute;
use ghz_transfer::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn basis(l: &SystemLayout, levels: &[usize]) -> QuantumState {
    QuantumState::basis(*l, l.index_of(levels).unwrap())
}

fn small() -> SystemLayout {
    build_layout(1, 1, 3, 3).unwrap()
}

fn stat(h: &OperatorMatrix, t: f64) -> EvolutionSpec {
    EvolutionSpec::unitary(Generator::Static(h.clone()), t)
}

/// Two resonant couplings at once, so the dynamics is not a single Rabi cycle.
fn mixed_hamiltonian(l: &SystemLayout) -> OperatorMatrix {
    let a = h_resonant_ef(l, Cavity::L, Site::Left(1), 2.0 * PI * 71e6).unwrap();
    let b = h_resonant_ge(l, Cavity::L, Site::Coupler, 2.0 * PI * 50e6).unwrap();
    a.add(&b).unwrap()
}

fn mixed_start(l: &SystemLayout) -> QuantumState {
    basis(l, &[2, 0, 0, 0, 0]).superpose(C64::new(0.6, 0.0), &basis(l, &[1, 1, 0, 1, 0]), C64::new(0.0, 0.8)).unwrap()
}

#[test]
fn zero_duration_is_identity() {
    let l = small();
    let psi = mixed_start(&l);
    assert_eq!(evolve_unitary(&psi, &stat(&mixed_hamiltonian(&l), 0.0)).unwrap(), psi);
}

#[test]
fn quarter_period_to_tight_tolerance() {
    let l = small();
    let mu1 = 2.0 * PI * 71e6;
    let h = h_resonant_ef(&l, Cavity::L, Site::Left(1), mu1).unwrap();
    let out = evolve_unitary(&basis(&l, &[2, 0, 0, 0, 0]), &stat(&h, PI / (2.0 * mu1))).unwrap();
    let target = basis(&l, &[1, 0, 0, 1, 0]);
    let amp = out.inner(&target).unwrap().conj();
    assert!((amp - C64::new(0.0, -1.0)).norm() < 1e-8, "{amp}");
}

#[test]
fn rejects_invalid_specs() {
    let l = small();
    let a = mode_annihilation(&l, Cavity::L).unwrap();
    let psi = basis(&l, &[0, 0, 0, 1, 0]);
    let err = evolve_unitary(&psi, &stat(&a, 1e-9)).unwrap_err();
    assert!(matches!(err, Error::NotHermitian(_)), "{err}");
    let h = mixed_hamiltonian(&l);
    assert!(evolve_unitary(&psi, &stat(&h, -1e-9)).is_err());
    assert!(evolve_unitary(&psi, &stat(&h, f64::NAN)).is_err());
    assert!(evolve_unitary(&psi, &stat(&h, 1e-9).with_tolerance(0.0)).is_err());

    let l2 = SystemLayout::symmetric(2).unwrap();
    let p = PhysicalParams::transmon_preset();
    let mut spec = EvolutionSpec::unitary(Generator::Dispersive(DispersiveDrive::new(&l2, &p).unwrap()), 1e-9);
    spec.max_step = Some(1.0 / p.delta);
    assert!(evolve_unitary(&basis(&l2, &[0; 7]), &spec).is_err());
}

#[test]
fn time_dependent_matches_detuned_frame() {
    let l = SystemLayout::symmetric(2).unwrap();
    let p = PhysicalParams::transmon_preset();
    let r = p.effective_rates();
    let spec = GhzSpec::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8), 2).unwrap();
    let start = make_oracle_state(Checkpoint::AfterStep2, &spec, &l).unwrap();
    let drive = DispersiveDrive::new(&l, &p).unwrap();
    for (t0, duration) in [(0.0, PI / r.lambda), (0.3e-9, 0.4 * PI / r.lambda)] {
        let td = evolve_unitary(&start, &EvolutionSpec::unitary(Generator::Dispersive(drive.clone()), duration).starting_at(t0)).unwrap();
        let frame = evolve_detuned_frame(&start, &drive, t0, duration).unwrap();
        let f = checkpoint_fidelity(&td, &frame).unwrap();
        assert!(f >= 1.0 - 1e-7, "t0 = {t0}: {f}");
        // not just equal up to a phase: the amplitudes agree
        assert!((td.amplitudes() - frame.amplitudes()).norm() < 1e-3);
    }
}

#[test]
fn time_dependent_keeps_norm() {
    let l = SystemLayout::symmetric(2).unwrap();
    let p = PhysicalParams::transmon_preset();
    let start = make_oracle_state(Checkpoint::AfterStep2, &GhzSpec::equal_weight(2), &l).unwrap();
    let spec = EvolutionSpec::unitary(Generator::Dispersive(DispersiveDrive::new(&l, &p).unwrap()), 20e-9);
    let out = evolve_unitary_observed(&start, &spec, None).unwrap();
    assert!(out.norm_drift < 1e-9, "{:e}", out.norm_drift);
    assert!((out.state.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn lindblad_without_channels_is_unitary() {
    let l = small();
    let h = mixed_hamiltonian(&l);
    let psi = mixed_start(&l);
    let t = 7.3e-9;
    let pure = evolve_unitary(&psi, &stat(&h, t)).unwrap();
    let rho = evolve_lindblad(&DensityMatrix::from_pure(&psi), &EvolutionSpec::lindblad(Generator::Static(h), t), &[]).unwrap();
    assert!(rho.fidelity_with_pure(&pure).unwrap() > 1.0 - 1e-7);
    assert!((rho.trace().re - 1.0).abs() < 1e-7);
}

#[test]
fn cavity_decay_is_exponential() {
    let l = small();
    let kappa = 1.0 / 5.138e-6;
    let d = Decoherence { kappa_l: kappa, ..Decoherence::none() };
    let p = PhysicalParams { decoherence: Some(d), ..PhysicalParams::transmon_preset() };
    let ops = collapse_operators(&l, &p).unwrap();
    let rho0 = DensityMatrix::from_pure(&basis(&l, &[0, 0, 0, 1, 0]));
    let mode = l.factor_of(Site::Mode(Cavity::L)).unwrap();
    for t in [0.5e-6, 2e-6, 5e-6] {
        let spec = EvolutionSpec::lindblad(Generator::Static(OperatorMatrix::zero(l)), t);
        let out = evolve_lindblad_report(&rho0, &spec, &ops).unwrap();
        let n: f64 = (1..=3).map(|k| k as f64 * out.density.factor_population(mode, k)).sum();
        assert!((n - (-kappa * t).exp()).abs() < 1e-6, "t = {t}: {n}");
        assert!(out.trace_drift < 1e-7);
        assert!(out.min_eigenvalue > -1e-6);
    }
}

#[test]
fn decoherence_lowers_protocol_fidelity() {
    let l = build_layout(2, 2, 3, 3).unwrap();
    let p = PhysicalParams::transmon_preset();
    assert!(p.decoherence.is_some());
    let ghz = GhzSpec::equal_weight(2);
    let schedule = build_schedule(&p, 2, 1e-6).unwrap();
    let open = run_protocol(&p, &ghz, &l, &schedule, &RunOptions::mode(RunMode::Lindblad)).unwrap();
    let closed = run_protocol(&p, &ghz, &l, &schedule, &RunOptions::mode(RunMode::IdealReduced)).unwrap();
    let (fo, fc) = (open.final_fidelity.unwrap(), closed.final_fidelity.unwrap());
    assert!(fo < fc, "{fo} vs {fc}");
    assert!(fo > 0.5);
    let rho = open.state.as_mixed().unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-7);
    assert!(rho.hermiticity_defect() < 1e-9);
}

#[test]
fn lindblad_mode_needs_rates() {
    let l = build_layout(2, 2, 3, 3).unwrap();
    let p = PhysicalParams::transmon_preset().without_decoherence();
    let schedule = build_schedule(&p, 2, 1e-6).unwrap();
    assert!(run_protocol(&p, &GhzSpec::equal_weight(2), &l, &schedule, &RunOptions::mode(RunMode::Lindblad)).is_err());
}

#[test]
fn checkpoint_fidelity_cases() {
    let l = small();
    let a = basis(&l, &[0, 1, 0, 0, 0]);
    let b = basis(&l, &[0, 0, 0, 0, 1]);
    assert_eq!(checkpoint_fidelity(&a, &a).unwrap(), 1.0);
    assert_eq!(checkpoint_fidelity(&a, &b).unwrap(), 0.0);
    let rotated = QuantumState::from_amplitudes(l, a.amplitudes() * C64::from_polar(1.0, 2.1)).unwrap();
    assert!((checkpoint_fidelity(&rotated, &a).unwrap() - 1.0).abs() < 1e-15);
    let other = QuantumState::basis(build_layout(1, 2, 3, 3).unwrap(), 0);
    assert!(checkpoint_fidelity(&a, &other).is_err());
}

#[test]
fn ideal_run_hits_intermediate_state() {
    let l = SystemLayout::symmetric(2).unwrap();
    let p = PhysicalParams::transmon_preset();
    let schedule = build_schedule(&p, 2, 1e-6).unwrap();
    let out = run_protocol(&p, &GhzSpec::equal_weight(2), &l, &schedule, &RunOptions::default()).unwrap();
    let cp = out.checkpoint(Checkpoint::AfterStep2).unwrap();
    assert!(cp.fidelity > 1.0 - 1e-8, "{}", cp.fidelity);
}

#[test]
fn top_fock_level_stays_empty() {
    let p = PhysicalParams::transmon_preset();
    for n in [2, 3] {
        let l = SystemLayout::symmetric(n).unwrap();
        let schedule = build_schedule(&p, n, 1e-6).unwrap();
        let out = run_protocol(&p, &GhzSpec::equal_weight(n), &l, &schedule, &RunOptions::default()).unwrap();
        assert!(out.max_top_fock() < 1e-6, "n = {n}: {:e}", out.max_top_fock());
    }
    let l = SystemLayout::symmetric(2).unwrap();
    let schedule = build_schedule(&p, 2, 1e-6).unwrap();
    let opts = RunOptions { route: DispersiveRoute::DetunedFrame, ..RunOptions::mode(RunMode::FullDispersive) };
    let out = run_protocol(&p, &GhzSpec::equal_weight(2), &l, &schedule, &opts).unwrap();
    assert!(out.max_top_fock() < 1e-6, "{:e}", out.max_top_fock());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_conserved(t in 1e-10f64..5e-8) {
        let l = small();
        let h = mixed_hamiltonian(&l);
        let psi = mixed_start(&l);
        let e0 = h.expectation(&psi).unwrap().re;
        let e1 = h.expectation(&evolve_unitary(&psi, &stat(&h, t)).unwrap()).unwrap().re;
        prop_assert!((e1 - e0).abs() < 1e-9 * e0.abs().max(h.matrix().max_abs()));
    }

    #[test]
    fn evolution_composes(t1 in 0.0f64..3e-8, t2 in 0.0f64..3e-8) {
        let l = small();
        let h = mixed_hamiltonian(&l);
        let psi = mixed_start(&l);
        let two = evolve_unitary(&evolve_unitary(&psi, &stat(&h, t1)).unwrap(), &stat(&h, t2)).unwrap();
        let one = evolve_unitary(&psi, &stat(&h, t1 + t2)).unwrap();
        prop_assert!(checkpoint_fidelity(&two, &one).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn evolution_reverses(t in 0.0f64..5e-8) {
        let l = small();
        let h = mixed_hamiltonian(&l);
        let back = h.scale(C64::new(-1.0, 0.0));
        let psi = mixed_start(&l);
        let out = evolve_unitary(&evolve_unitary(&psi, &stat(&h, t)).unwrap(), &stat(&back, t)).unwrap();
        prop_assert!(checkpoint_fidelity(&out, &psi).unwrap() >= 1.0 - 1e-9);
    }
}
