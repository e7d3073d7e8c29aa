use std::f64::consts::TAU;

use ghz_transfer::params::{angular_from_mhz, mhz_from_angular, TRANSMON_PRESET_NAME};
use ghz_transfer::*;

const MINIMAL: &str = r#"
[couplings_mhz]
mu1 = 1.0
mu1_tilde = 1.0
mu1p = 1.0
mu1p_tilde = 1.0
mu_al = 1.0
mu_ar = 1.0
mu = 2.0
mu_prime = 2.0

[detunings_mhz]
delta = 20.0
delta_prime = 30.0

[ramps_ns]
tau_a = 0.0
tau_1 = 1.0
tau_1p = 1.0
tau_q = 1.0
tau_qp = 1.0
"#;

#[test]
fn preset_is_found_by_name() {
    assert_eq!(TRANSMON_PRESET_NAME, "transmon-tlr");
    assert_eq!(PhysicalParams::preset("transmon-tlr"), Some(PhysicalParams::transmon_preset()));
    assert!(PhysicalParams::preset("transmon").is_none());
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/presets/transmon-tlr.toml");
    assert_eq!(PhysicalParams::from_file(path).unwrap(), PhysicalParams::transmon_preset());
}

#[test]
fn minimal_file_has_no_decoherence() {
    let p = PhysicalParams::from_toml_str(MINIMAL).unwrap();
    assert_eq!(p.mu, TAU * 2e6);
    assert_eq!(p.delta_prime, TAU * 30e6);
    assert_eq!(p.ramps.tau_a, 0.0);
    assert_eq!(p.ramps.tau_q, 1e-9);
    assert!(p.decoherence.is_none());
    let r = p.effective_rates();
    assert_eq!(r.lambda, p.mu * p.mu / p.delta);
    assert!(r.lambda_prime < r.lambda);
    assert!(p.validate().unwrap().is_empty());
}

#[test]
fn cavity_lifetime_can_be_given_directly() {
    let text = format!("{MINIMAL}\n[decoherence.cavity_l]\nkappa_inv_us = 4.0\n");
    let d = PhysicalParams::from_toml_str(&text).unwrap().decoherence.unwrap();
    assert_eq!(d.kappa_l, 1.0 / 4e-6);
    assert_eq!(d.kappa_r, 0.0);
    assert!(d.left.t1.is_infinite());
}

#[test]
fn preset_cavity_lifetime_follows_quality_factor() {
    let d = PhysicalParams::transmon_preset().decoherence.unwrap();
    let expected = 3e5 / (TAU * 9.293e9);
    assert!((1.0 / d.kappa_l - expected).abs() / expected < 1e-12);
    assert_eq!(d.kappa_l, d.kappa_r);
    assert_eq!(d.left.t1f, 10e-6);
    assert!(d.coupler.t1f.is_infinite());
}

#[test]
fn malformed_files_are_rejected() {
    let cases = [
        (MINIMAL.replace("mu_ar = 1.0\n", ""), "mu_ar"),
        (MINIMAL.replace("mu_ar", "mu_ax"), "mu_ax"),
        (format!("{MINIMAL}\n[extras]\nx = 1\n"), "extras"),
        (MINIMAL.replace("mu = 2.0", "mu = \"fast\""), "mu"),
        (MINIMAL.replace("mu = 2.0", "mu = -2.0"), "mu must be positive"),
        (MINIMAL.replace("tau_q = 1.0", "tau_q = -1.0"), "tau_q"),
        (format!("{MINIMAL}\n[decoherence.cavity_l]\nquality_factor = 0.0\nfreq_ghz = 9.0\n"), "quality"),
        (format!("{MINIMAL}\n[decoherence.left]\nt1_us = 10.0\nt2_us = 30.0\n"), "unphysical"),
        ("[couplings_mhz\n".to_string(), "couplings_mhz"),
    ];
    for (text, needle) in cases {
        let err = PhysicalParams::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains(needle), "expected `{needle}` in: {err}");
    }
}

#[test]
fn small_detuning_only_warns() {
    let p = PhysicalParams::from_toml_str(&MINIMAL.replace("delta = 20.0", "delta = 8.0")).unwrap();
    let w = p.validate().unwrap();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("below 5"), "{}", w[0]);
}

#[test]
fn helpers_convert_units() {
    assert_eq!(angular_from_mhz(50.0), TAU * 50e6);
    assert!((mhz_from_angular(angular_from_mhz(70.5)) - 70.5).abs() < 1e-12);
    let p = PhysicalParams::transmon_preset();
    assert_eq!(p.with_detuning_ratio(20.0).delta, 20.0 * p.mu);
    let q = p.with_cavity_lifetime(2e-6).decoherence.unwrap();
    assert_eq!((q.kappa_l, q.kappa_r), (5e5, 5e5));
    assert!(p.without_decoherence().decoherence.is_none());
    assert!(p.without_decoherence().with_cavity_lifetime(1e-6).decoherence.unwrap().left.t1.is_infinite());
}
