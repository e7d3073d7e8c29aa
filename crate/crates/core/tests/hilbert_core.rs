use std::f64::consts::FRAC_1_SQRT_2;

use ghz_transfer::analysis::{logical_reduction, LogicalBasis};
use ghz_transfer::operator::{embed_product, level_transition};
use ghz_transfer::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn basis(l: &SystemLayout, levels: &[usize]) -> QuantumState {
    QuantumState::basis(*l, l.index_of(levels).unwrap())
}

/// Dense `I x .. x local x .. x I` built with Kronecker products.
fn kron_embed(dims: &[usize], factor: usize, local: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let m = if k == factor { local.clone() } else { DMatrix::identity(d, d) };
        out = out.kronecker(&m);
    }
    out
}

#[test]
fn layout_dimensions() {
    assert_eq!(build_layout(1, 1, 3, 3).unwrap().dim(), 288);
    assert_eq!(build_layout(3, 3, 4, 4).unwrap().dim(), 36450);
    let err = build_layout(1, 1, 2, 3).unwrap_err().to_string();
    assert!(err.contains("2 photons"), "{err}");
    assert!(build_layout(0, 1, 3, 3).is_err());
}

#[test]
fn basis_order_slowest_to_fastest() {
    let l = build_layout(1, 1, 3, 3).unwrap();
    assert_eq!(l.dims(), vec![3, 2, 3, 4, 4]);
    // the photon number of mode b is the fastest index
    assert_eq!(l.index_of(&[0, 0, 0, 0, 1]).unwrap(), 1);
    assert_eq!(l.index_of(&[0, 0, 0, 1, 0]).unwrap(), 4);
    assert_eq!(l.index_of(&[1, 0, 0, 0, 0]).unwrap(), 96);
}

#[test]
fn coupler_lowering() {
    let l = build_layout(2, 2, 3, 3).unwrap();
    let op = embed_qudit_op(&l, Site::Coupler, &level_transition(2, Level::G, Level::E)).unwrap();
    let psi = basis(&l, &[1, 2, 1, 0, 2, 3, 1]);
    assert_eq!(op.apply(&psi).unwrap(), basis(&l, &[1, 2, 0, 0, 2, 3, 1]));
}

#[test]
fn identity_embedding() {
    let l = build_layout(1, 2, 3, 4).unwrap();
    let op = embed_qudit_op(&l, Site::Right(2), &DMatrix::identity(3, 3)).unwrap();
    assert_eq!(op.matrix().to_dense(), DMatrix::identity(l.dim(), l.dim()));
}

#[test]
fn lowering_from_ground_is_zero() {
    let l = build_layout(1, 1, 3, 3).unwrap();
    let op = embed_qudit_op(&l, Site::Left(1), &level_transition(3, Level::E, Level::F)).unwrap();
    let out = op.apply(&basis(&l, &[0, 1, 2, 1, 1])).unwrap();
    assert_eq!(out.norm(), 0.0);
}

#[test]
fn embedding_rejects_wrong_local_size() {
    let l = build_layout(1, 1, 3, 3).unwrap();
    assert!(embed_qudit_op(&l, Site::Coupler, &DMatrix::identity(3, 3)).is_err());
    assert!(embed_qudit_op(&l, Site::Left(1), &DMatrix::identity(2, 2)).is_err());
    assert!(embed_qudit_op(&l, Site::Left(2), &DMatrix::identity(3, 3)).is_err());
}

#[test]
fn ladder_operators() {
    let l = build_layout(1, 1, 4, 4).unwrap();
    let a = mode_annihilation(&l, Cavity::L).unwrap();
    let out = a.apply(&basis(&l, &[0, 0, 0, 2, 0])).unwrap();
    let expected = basis(&l, &[0, 0, 0, 1, 0]).amplitudes() * c(2f64.sqrt());
    assert!((out.amplitudes() - expected).norm() < 1e-15);
    assert_eq!(a.apply(&basis(&l, &[2, 1, 0, 0, 3])).unwrap().norm(), 0.0);

    let ad = mode_creation(&l, Cavity::L).unwrap();
    assert_eq!(ad.matrix().to_dense(), a.matrix().to_dense().adjoint());
    // [a, a^dag] = 1 except on the top Fock level, where it is -cutoff
    let comm = a.commutator(&ad).unwrap().matrix().to_dense();
    for i in 0..l.dim() {
        let n = l.levels_of(i)[3];
        let want = if n < 4 { 1.0 } else { -4.0 };
        assert!((comm[(i, i)] - c(want)).norm() < 1e-12, "n = {n}");
    }
    let off: f64 = (0..l.dim()).flat_map(|i| (0..l.dim()).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| comm[ij].norm()).fold(0.0, f64::max);
    assert!(off < 1e-12);
}

#[test]
fn product_trace_is_pure() {
    let l = build_layout(1, 1, 3, 3).unwrap();
    let plus = DVector::from_vec(vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0)]);
    let e = |d: usize, i: usize| DVector::from_fn(d, |k, _| c((k == i) as u8 as f64));
    let psi = QuantumState::product(l, &[plus.clone(), e(2, 1), e(3, 2), e(4, 0), e(4, 1)]).unwrap();
    let rho = psi.partial_trace(&[Site::Left(1)]).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-14);
    assert!((rho.to_dense() - &plus * plus.adjoint()).norm() < 1e-15);
    let rest = psi.partial_trace(&[Site::Coupler, Site::Mode(Cavity::R)]).unwrap();
    assert!((rest.trace().re - 1.0).abs() < 1e-15);
    assert!((rest.purity() - 1.0).abs() < 1e-14);
    assert!(psi.partial_trace(&[]).is_err());
}

#[test]
fn encoded_ghz_single_qubit_reductions_are_maximally_mixed() {
    let l = build_layout(3, 3, 3, 3).unwrap();
    let psi = make_oracle_state(Checkpoint::Initial, &GhzSpec::equal_weight(3), &l).unwrap();
    let cases = [
        (Site::Left(1), LogicalBasis::GroundF),
        (Site::Left(2), LogicalBasis::PlusMinus),
        (Site::Left(3), LogicalBasis::PlusMinus),
    ];
    for (site, basis) in cases {
        let m = logical_reduction(&psi, site, basis).unwrap();
        let half = DMatrix::<C64>::identity(2, 2) * c(0.5);
        assert!((m - half).norm() < 1e-12, "{site}");
        // nothing lies outside the logical pair
        let full = psi.partial_trace(&[site]).unwrap();
        assert!((full.trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn snapshot_file_round_trip() {
    let l = build_layout(2, 2, 3, 3).unwrap();
    let psi = make_oracle_state(Checkpoint::AfterStep2, &GhzSpec::new(c(0.6), C64::new(0.0, 0.8), 2).unwrap(), &l).unwrap();
    let dir = std::env::temp_dir().join(format!("ghz-snapshot-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.json");
    std::fs::write(&path, psi.to_snapshot_json().unwrap()).unwrap();
    let back = QuantumState::from_snapshot_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, psi);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn local3() -> impl Strategy<Value = DMatrix<C64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9)
        .prop_map(|v| DMatrix::from_iterator(3, 3, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embedding_matches_kronecker(m in local3(), site in 0usize..4) {
        let l = build_layout(2, 1, 3, 3).unwrap();
        let s = [Site::Left(1), Site::Left(2), Site::Right(1), Site::Left(2)][site];
        let f = l.factor_of(s).unwrap();
        let sparse = embed_qudit_op(&l, s, &m).unwrap().matrix().to_dense();
        prop_assert!((sparse - kron_embed(&l.dims(), f, &m)).norm() < 1e-13);
    }

    #[test]
    fn embedding_is_homomorphic(a in local3(), b in local3()) {
        let l = build_layout(2, 1, 3, 3).unwrap();
        let ea = embed_qudit_op(&l, Site::Left(2), &a).unwrap();
        let eb = embed_qudit_op(&l, Site::Left(2), &b).unwrap();
        let eab = embed_qudit_op(&l, Site::Left(2), &(&a * &b)).unwrap();
        let prod = ea.mul(&eb).unwrap();
        prop_assert!(prod.matrix().max_abs_diff(eab.matrix()) < 1e-12);
    }

    #[test]
    fn disjoint_sites_commute(a in local3(), b in local3()) {
        let l = build_layout(2, 2, 3, 3).unwrap();
        let ea = embed_qudit_op(&l, Site::Left(1), &a).unwrap();
        let eb = embed_qudit_op(&l, Site::Right(2), &b).unwrap();
        prop_assert!(ea.commutator(&eb).unwrap().matrix().max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_keeps_unit_trace(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 288), keep in 0usize..5) {
        let l = build_layout(1, 1, 3, 3).unwrap();
        let psi = QuantumState::from_amplitudes(l, DVector::from_iterator(288, v.into_iter().map(|(a, b)| C64::new(a, b))))
            .unwrap()
            .normalized()
            .unwrap();
        let site = [Site::Left(1), Site::Coupler, Site::Right(1), Site::Mode(Cavity::L), Site::Mode(Cavity::R)][keep];
        let rho = psi.partial_trace(&[site]).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
    }
}

#[test]
fn index_round_trip_n2() {
    let l = build_layout(2, 2, 4, 4).unwrap();
    for i in 0..l.dim() {
        assert_eq!(l.index_of(&l.levels_of(i)).unwrap(), i);
        assert_eq!(l.index_of_label(&l.label(i)).unwrap(), i);
    }
}

#[test]
fn embed_product_two_factors_matches_kronecker() {
    let l = build_layout(1, 1, 3, 3).unwrap();
    let a = ghz_transfer::operator::local_annihilation(3);
    let s = level_transition(3, Level::E, Level::F);
    let sparse = embed_product(&l, &[(0, &s), (3, &a.adjoint())]).unwrap().to_dense();
    let dense = kron_embed(&l.dims(), 0, &s) * kron_embed(&l.dims(), 3, &a.adjoint());
    assert!((sparse - dense).norm() < 1e-15);
}
