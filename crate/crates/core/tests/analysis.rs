use std::f64::consts::FRAC_1_SQRT_2;

use ghz_transfer::analysis::*;
use ghz_transfer::evolution::trajectory::{evaluate, Tracked};
use ghz_transfer::evolution::{evolve_unitary_observed, Observer};
use ghz_transfer::hamiltonian::h_dispersive_reduced;
use ghz_transfer::runner::run_schedule;
use ghz_transfer::*;
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn ket(d: usize, amps: &[(usize, C64)]) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    for &(i, a) in amps {
        v[i] = a;
    }
    v
}

fn g() -> DVector<C64> {
    ket(3, &[(0, c(1.0))])
}

fn f() -> DVector<C64> {
    ket(3, &[(2, c(1.0))])
}

fn pm(sign: f64) -> DVector<C64> {
    ket(3, &[(0, c(FRAC_1_SQRT_2)), (1, c(sign * FRAC_1_SQRT_2))])
}

/// `q1, left spectators, coupler, q1', right spectators, photons` as a product.
fn product(l: &SystemLayout, q1: DVector<C64>, left: f64, q1p: DVector<C64>, right: f64, photons: (usize, usize)) -> QuantumState {
    let mut locals = vec![q1];
    locals.extend((1..l.n_left).map(|_| pm(left)));
    locals.push(ket(2, &[(0, c(1.0))]));
    locals.push(q1p);
    locals.extend((1..l.n_right).map(|_| pm(right)));
    locals.push(ket(l.cutoff_l + 1, &[(photons.0, c(1.0))]));
    locals.push(ket(l.cutoff_r + 1, &[(photons.1, c(1.0))]));
    QuantumState::product(*l, &locals).unwrap()
}

fn close(a: &QuantumState, b: &QuantumState) -> f64 {
    (a.amplitudes() - b.amplitudes()).norm()
}

#[test]
fn initial_oracle_with_beta_zero_is_product() {
    let l = SystemLayout::symmetric(2).unwrap();
    let spec = GhzSpec::new(c(1.0), c(0.0), 2).unwrap();
    let psi = make_oracle_state(Checkpoint::Initial, &spec, &l).unwrap();
    assert!(close(&psi, &product(&l, g(), 1.0, g(), 1.0, (0, 0))) < 1e-15);
}

#[test]
fn initial_and_final_oracles() {
    let l = SystemLayout::symmetric(3).unwrap();
    let (a, b) = (c(0.6), C64::new(0.0, 0.8));
    let spec = GhzSpec::new(a, b, 3).unwrap();
    let init = product(&l, g(), 1.0, g(), 1.0, (0, 0)).superpose(a, &product(&l, f(), -1.0, g(), 1.0, (0, 0)), b).unwrap();
    assert!(close(&make_oracle_state(Checkpoint::Initial, &spec, &l).unwrap(), &init) < 1e-14);
    let fin = product(&l, g(), 1.0, g(), 1.0, (0, 0)).superpose(a, &product(&l, g(), 1.0, f(), -1.0, (0, 0)), b).unwrap();
    assert!(close(&make_oracle_state(Checkpoint::Final, &spec, &l).unwrap(), &fin) < 1e-14);
}

#[test]
fn intermediate_oracles_carry_printed_signs() {
    let l = SystemLayout::symmetric(2).unwrap();
    let (a, b) = (c(0.6), c(0.8));
    let spec = GhzSpec::new(a, b, 2).unwrap();
    let alpha = product(&l, g(), 1.0, g(), 1.0, (0, 0));
    let cases = [
        (Checkpoint::AfterStep1, product(&l, g(), -1.0, g(), 1.0, (2, 0)), -1.0),
        (Checkpoint::AfterStep2, product(&l, g(), -1.0, g(), 1.0, (1, 1)), 1.0),
        (Checkpoint::AfterStep3, product(&l, g(), 1.0, g(), -1.0, (1, 1)), 1.0),
        (Checkpoint::AfterStep4, product(&l, g(), 1.0, g(), -1.0, (0, 2)), -1.0),
    ];
    for (cp, beta, sign) in cases {
        let want = alpha.superpose(a, &beta, b * sign).unwrap();
        assert!(close(&make_oracle_state(cp, &spec, &l).unwrap(), &want) < 1e-14, "{cp}");
    }
}

#[test]
fn oracle_overlap_with_initial_is_alpha_weight() {
    let l = SystemLayout::symmetric(2).unwrap();
    for (a, b) in sample_amplitudes(11, 5) {
        let spec = GhzSpec::new(a, b, 2).unwrap();
        let i = make_oracle_state(Checkpoint::Initial, &spec, &l).unwrap();
        let s2 = make_oracle_state(Checkpoint::AfterStep2, &spec, &l).unwrap();
        assert!((s2.inner(&i).unwrap() - c(a.norm_sqr())).norm() < 1e-14);
    }
}

#[test]
fn oracle_rejects_bad_inputs() {
    assert!(GhzSpec::new(c(0.5), c(0.5), 2).is_err());
    assert!(GhzSpec::new(c(1.0), c(0.0), 0).is_err());
    let l = SystemLayout::symmetric(3).unwrap();
    assert!(make_oracle_state(Checkpoint::Final, &GhzSpec::equal_weight(2), &l).is_err());
    assert!("after_step7".parse::<Checkpoint>().is_err());
    for cp in Checkpoint::ALL {
        assert_eq!(cp.name().parse::<Checkpoint>().unwrap(), cp);
    }
}

#[test]
fn occupation_probability_values() {
    let p = occupation_probability(1.0, 10.0);
    assert!((p - 4.0 / 104.0).abs() < 1e-15);
    assert!((p - 0.0385).abs() < 1e-4);
    assert_eq!(occupation_probability(1.0, 2.0), 0.5);
    assert!(occupation_probability(1.0, 1e12) < 1e-23);
}

#[test]
fn reduced_dynamics_never_populates_f() {
    let l = SystemLayout::symmetric(3).unwrap();
    let p = PhysicalParams::transmon_preset();
    let start = make_oracle_state(Checkpoint::AfterStep2, &GhzSpec::equal_weight(3), &l).unwrap();
    let h = h_dispersive_reduced(&l, &p).unwrap();
    let mut trace = FOccupationTrace::default();
    let mut cb = |t: f64, idx: &[usize], amps: &[C64]| {
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        trace.samples.push((t, evaluate(&l, Tracked::SpectatorF, idx, &probs)));
    };
    let spec = EvolutionSpec::unitary(Generator::Static(h), std::f64::consts::PI / p.effective_rates().lambda);
    evolve_unitary_observed(&start, &spec, Some(Observer { samples: 16, callback: &mut cb })).unwrap();
    let probs: Vec<f64> = start.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    trace.excitable = excitable_population(&l, &(0..l.dim()).collect::<Vec<_>>(), &probs);
    assert!(trace.samples.len() >= 17);
    // two spectators per cavity in e with half the weight on the photon branch
    assert!((trace.excitable - 1.0).abs() < 1e-12);
    assert_eq!(measured_f_occupation(&trace), 0.0);
    let out = run_protocol(&p, &GhzSpec::equal_weight(3), &l, &build_schedule(&p, 3, 1e-6).unwrap(), &RunOptions::default()).unwrap();
    assert!(out.f_occupation.is_none_or(|r| r.measured == 0.0));
}

fn full_occupation(ratio: f64) -> runner::FOccupationReport {
    let p = PhysicalParams::transmon_preset().with_detuning_ratio(ratio);
    let l = SystemLayout::symmetric(2).unwrap();
    let s = build_schedule(&p, 2, 1e-6).unwrap();
    run_protocol(&p, &GhzSpec::equal_weight(2), &l, &s, &RunOptions::mode(RunMode::FullDispersive))
        .unwrap()
        .f_occupation
        .unwrap()
}

#[test]
fn full_dynamics_occupation_matches_estimate() {
    let r10 = full_occupation(10.0);
    assert!((r10.predicted - 4.0 / 104.0).abs() < 1e-15);
    let ratio = r10.measured / r10.predicted;
    assert!((0.5..=2.0).contains(&ratio), "measured {} vs {}", r10.measured, r10.predicted);
    let r30 = full_occupation(30.0);
    assert!(r30.measured < r10.measured, "{} !< {}", r30.measured, r10.measured);
}

#[test]
fn measured_occupation_normalization() {
    let trace = FOccupationTrace { samples: vec![(0.0, 0.0), (1.0, 0.02), (2.0, 0.01)], excitable: 0.5 };
    assert!((measured_f_occupation(&trace) - 0.04).abs() < 1e-15);
    assert_eq!(measured_f_occupation(&FOccupationTrace { samples: vec![(0.0, 0.3)], excitable: 0.0 }), 0.0);
}

#[test]
fn logical_pulse_maps_to_plus_minus() {
    let u = logical_pulse_matrix();
    assert!((u.adjoint() * &u - nalgebra::DMatrix::<C64>::identity(3, 3)).norm() < 1e-15);
    assert!((&u * g() - pm(1.0)).norm() < 1e-15);
    assert!((&u * f() - pm(-1.0)).norm() < 1e-15);

    let l = SystemLayout::symmetric(3).unwrap();
    let (a, b) = (c(0.6), C64::new(0.0, 0.8));
    let spec = GhzSpec::new(a, b, 3).unwrap().with_encoding(Encoding::Logical);
    let fin = make_oracle_state(Checkpoint::Final, &spec, &l).unwrap();
    // every right qubit in |+> for alpha and |-> for beta
    let want = product(&l, g(), 1.0, pm(1.0), 1.0, (0, 0)).superpose(a, &product(&l, g(), 1.0, pm(-1.0), -1.0, (0, 0)), b).unwrap();
    assert!(close(&fin, &want) < 1e-14);

    let plain = make_oracle_state(Checkpoint::Final, &GhzSpec { encoding: Encoding::GroundF, ..spec }, &l).unwrap();
    let there_and_back = logical_decode_pulse(&logical_encode_pulse(&plain, Site::Right(1)).unwrap(), Site::Right(1)).unwrap();
    assert!(close(&there_and_back, &plain) < 1e-15);
    assert!(logical_encode_pulse(&plain, Site::Coupler).is_err());
    assert_eq!(outside_ground_f(&plain, Site::Right(1)).unwrap(), 0.0);
}

#[test]
fn equal_weight_logical_code_hides_each_qubit() {
    let l = SystemLayout::symmetric(3).unwrap();
    let spec = GhzSpec::equal_weight(3).with_encoding(Encoding::Logical);
    let fin = make_oracle_state(Checkpoint::Final, &spec, &l).unwrap();
    for site in (1..=3).map(Site::Right) {
        let m = logical_reduction(&fin, site, LogicalBasis::PlusMinus).unwrap();
        assert!(distance_from_maximally_mixed(&m) < 1e-9, "{site}");
    }
}

#[test]
fn unequal_weights_are_visible_in_reductions() {
    let l = SystemLayout::symmetric(2).unwrap();
    let spec = GhzSpec::new(c(0.6), c(0.8), 2).unwrap().with_encoding(Encoding::Logical);
    let fin = make_oracle_state(Checkpoint::Final, &spec, &l).unwrap();
    let m = logical_reduction(&fin, Site::Right(2), LogicalBasis::PlusMinus).unwrap();
    assert!((m[(0, 0)].re - 0.36).abs() < 1e-12);
    assert!((m[(1, 1)].re - 0.64).abs() < 1e-12);
    assert!((distance_from_maximally_mixed(&m) - 0.14).abs() < 1e-12);
}

#[test]
fn oracle_chain_from_step_two() {
    let p = PhysicalParams::transmon_preset();
    for n in [2, 3] {
        let l = SystemLayout::symmetric(n).unwrap();
        let spec = GhzSpec::new(c(0.6), C64::new(0.0, 0.8), n).unwrap();
        let full = build_schedule(&p, n, 1e-6).unwrap();
        let tail = Schedule { segments: full.segments[4..].to_vec(), final_ramp: full.final_ramp };
        assert_eq!(tail.segments[0].label, "step3");
        let start = runner::RunState::Pure(make_oracle_state(Checkpoint::AfterStep2, &spec, &l).unwrap());
        let (end, reports, _, _) = run_schedule(start, &tail, &p, &RunOptions::default(), |_, _| Ok(())).unwrap();
        assert_eq!(reports.len(), 5);
        let f = end.fidelity(&make_oracle_state(Checkpoint::Final, &spec, &l).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-7, "n = {n}: {f}");
    }
}

#[test]
fn random_amplitudes_transfer_uniformly() {
    let p = PhysicalParams::transmon_preset();
    for n in [2, 3] {
        let l = SystemLayout::symmetric(n).unwrap();
        let s = build_schedule(&p, n, 1e-6).unwrap();
        let fids: Vec<f64> = sample_amplitudes(2024, 20)
            .into_iter()
            .map(|(a, b)| run_protocol(&p, &GhzSpec::new(a, b, n).unwrap(), &l, &s, &RunOptions::default()).unwrap().final_fidelity.unwrap())
            .collect();
        let lo = fids.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= 1.0 - 1e-6, "n = {n}: {lo}");
        assert!(hi - lo < 1e-8, "n = {n}: spread {}", hi - lo);
    }
}

#[test]
fn ideal_run_reproduces_branch_phases() {
    let p = PhysicalParams::transmon_preset();
    let l = SystemLayout::symmetric(2).unwrap();
    let spec = GhzSpec::new(c(0.6), C64::new(0.48, 0.64), 2).unwrap();
    let out = run_protocol(&p, &spec, &l, &build_schedule(&p, 2, 1e-6).unwrap(), &RunOptions::default()).unwrap();
    assert_eq!(out.checkpoints.len(), 6);
    for cp in out.checkpoints.iter().skip(1) {
        let ph = cp.phases.unwrap();
        assert!((ph.alpha_ratio.unwrap() - c(1.0)).norm() < 1e-8, "{}", cp.checkpoint);
        assert!((ph.beta_ratio.unwrap() - c(1.0)).norm() < 1e-8, "{}", cp.checkpoint);
        assert!(ph.relative_phase.unwrap().abs() < 1e-8);
        assert!(cp.fidelity >= 1.0 - 1e-7);
    }
}

#[test]
fn branch_phase_detects_sign_flip() {
    let l = SystemLayout::symmetric(2).unwrap();
    let spec = GhzSpec::equal_weight(2);
    let flipped = make_oracle_state(Checkpoint::AfterStep2, &GhzSpec::new(spec.alpha, -spec.beta, 2).unwrap(), &l).unwrap();
    let ph = branch_phases(&flipped, Checkpoint::AfterStep2, &spec).unwrap();
    assert!((ph.relative_phase.unwrap().abs() - std::f64::consts::PI).abs() < 1e-12);
    let alpha_only = GhzSpec::new(c(1.0), c(0.0), 2).unwrap();
    let ph = branch_phases(&make_oracle_state(Checkpoint::Initial, &alpha_only, &l).unwrap(), Checkpoint::Initial, &alpha_only).unwrap();
    assert!(ph.beta_ratio.is_none() && ph.relative_phase.is_none());
}

#[test]
fn amplitude_sources() {
    let eq: AmplitudeSource = "equal".parse().unwrap();
    assert_eq!(eq.pairs(), vec![(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2))]);
    let lit: AmplitudeSource = "0.6,0.8i".parse().unwrap();
    assert_eq!(lit.pairs(), vec![(c(0.6), C64::new(0.0, 0.8))]);
    let mixed: AmplitudeSource = "0.6,0.48+0.64i".parse().unwrap();
    assert_eq!(mixed.pairs()[0].1, C64::new(0.48, 0.64));
    let r: AmplitudeSource = "random:7:3".parse().unwrap();
    assert_eq!(r.pairs().len(), 3);
    assert_eq!(r.pairs(), sample_amplitudes(7, 3));
    assert_eq!(r.to_string().parse::<AmplitudeSource>().unwrap(), r);
    for bad in ["", "0.6", "random:1", "random:x:2", "random:1:0", "0.6,zz", "0.5,0.5"] {
        assert!(bad.parse::<AmplitudeSource>().is_err(), "{bad}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_are_normalized(seed in any::<u64>()) {
        for (a, b) in sample_amplitudes(seed, 4) {
            prop_assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!(a.im == 0.0 && a.re >= 0.0);
            prop_assert!(GhzSpec::new(a, b, 2).is_ok());
        }
    }

    #[test]
    fn oracles_are_normalized(seed in any::<u64>(), n in 1usize..4, cp in 0usize..6) {
        let (a, b) = sample_amplitudes(seed, 1)[0];
        let l = SystemLayout::symmetric(n).unwrap();
        let psi = make_oracle_state(Checkpoint::ALL[cp], &GhzSpec::new(a, b, n).unwrap(), &l).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}
