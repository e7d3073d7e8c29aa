//! Physical parameters and the parameter file.
//!
//! Internally every coupling and detuning is an angular frequency in rad/s
//! (hbar = 1) and every time is in seconds. Parameter files state cyclic
//! frequencies in MHz and times in ns / us; [`angular_from_mhz`] and friends do
//! the conversion.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::cavity_lifetime;

/// `2 pi * f` for `f` in MHz, in rad/s.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    TAU * (f_mhz * 1e6)
}

/// Inverse of [`angular_from_mhz`] (not bit-exact in general).
pub fn mhz_from_angular(omega: f64) -> f64 {
    omega / TAU / 1e6
}

pub fn seconds_from_ns(t: f64) -> f64 {
    t / 1e9
}

pub fn seconds_from_us(t: f64) -> f64 {
    t / 1e6
}

/// Clock time spent adjusting level spacings, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampTimes {
    /// Coupler A.
    pub tau_a: f64,
    /// Qubit 1.
    pub tau_1: f64,
    /// Qubit 1'.
    pub tau_1p: f64,
    /// Spectator qubits 2..n.
    pub tau_q: f64,
    /// Spectator qubits 2'..n'.
    pub tau_qp: f64,
}

impl RampTimes {
    pub fn uniform(t: f64) -> Self {
        RampTimes { tau_a: t, tau_1: t, tau_1p: t, tau_q: t, tau_qp: t }
    }
}

/// Lifetimes of one qubit species in seconds. `f64::INFINITY` disables a channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitLifetimes {
    /// Relaxation e -> g.
    pub t1: f64,
    /// Coherence time of the g-e superposition.
    pub t2: f64,
    /// Relaxation f -> e (ignored for the coupler).
    pub t1f: f64,
    /// Coherence time of the g-f superposition (ignored for the coupler).
    pub t2f: f64,
}

impl QubitLifetimes {
    pub fn ideal() -> Self {
        QubitLifetimes { t1: f64::INFINITY, t2: f64::INFINITY, t1f: f64::INFINITY, t2f: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoherence {
    pub left: QubitLifetimes,
    pub right: QubitLifetimes,
    pub coupler: QubitLifetimes,
    /// Photon decay rate of cavity L in 1/s.
    pub kappa_l: f64,
    /// Photon decay rate of cavity R in 1/s.
    pub kappa_r: f64,
}

impl Decoherence {
    pub fn none() -> Self {
        Decoherence {
            left: QubitLifetimes::ideal(),
            right: QubitLifetimes::ideal(),
            coupler: QubitLifetimes::ideal(),
            kappa_l: 0.0,
            kappa_r: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Resonant e-f coupling of qubit 1 to cavity L.
    pub mu1: f64,
    /// Resonant g-e coupling of qubit 1 to cavity L.
    pub mu1_tilde: f64,
    /// Resonant e-f coupling of qubit 1' to cavity R.
    pub mu1p: f64,
    /// Resonant g-e coupling of qubit 1' to cavity R.
    pub mu1p_tilde: f64,
    pub mu_al: f64,
    pub mu_ar: f64,
    /// Dispersive e-f coupling of the spectators in cavity L.
    pub mu: f64,
    /// Dispersive e-f coupling of the spectators in cavity R.
    pub mu_prime: f64,
    /// e-f transition minus cavity frequency, cavity L.
    pub delta: f64,
    pub delta_prime: f64,
    pub ramps: RampTimes,
    pub decoherence: Option<Decoherence>,
}

/// Second-order dispersive rates `lambda = mu^2 / delta`, `lambda' = mu'^2 / delta'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    pub lambda: f64,
    pub lambda_prime: f64,
}

impl EffectiveRates {
    pub fn from_params(p: &PhysicalParams) -> Self {
        EffectiveRates { lambda: p.mu * p.mu / p.delta, lambda_prime: p.mu_prime * p.mu_prime / p.delta_prime }
    }
}

pub const TRANSMON_PRESET_NAME: &str = "transmon-tlr";
const TRANSMON_PRESET: &str = include_str!("../presets/transmon-tlr.toml");

impl PhysicalParams {
    /// The shipped transmon / transmission-line-resonator parameter set.
    pub fn transmon_preset() -> Self {
        Self::from_toml_str(TRANSMON_PRESET).expect("shipped preset parses")
    }

    pub fn preset(name: &str) -> Option<Self> {
        (name == TRANSMON_PRESET_NAME).then(Self::transmon_preset)
    }

    pub fn preset_source(name: &str) -> Option<&'static str> {
        (name == TRANSMON_PRESET_NAME).then_some(TRANSMON_PRESET)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ParamsFile = toml::from_str(text)?;
        file.into_params()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn effective_rates(&self) -> EffectiveRates {
        EffectiveRates::from_params(self)
    }

    /// Checks positivity of every coupling, detuning and ramp; returns
    /// non-fatal warnings (large-detuning sanity).
    pub fn validate(&self) -> Result<Vec<String>> {
        let named = [
            ("mu1", self.mu1),
            ("mu1_tilde", self.mu1_tilde),
            ("mu1p", self.mu1p),
            ("mu1p_tilde", self.mu1p_tilde),
            ("mu_al", self.mu_al),
            ("mu_ar", self.mu_ar),
            ("mu", self.mu),
            ("mu_prime", self.mu_prime),
            ("delta", self.delta),
            ("delta_prime", self.delta_prime),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("{name} must be positive and finite (got {v})")));
            }
        }
        let r = &self.ramps;
        for (name, v) in [("tau_a", r.tau_a), ("tau_1", r.tau_1), ("tau_1p", r.tau_1p), ("tau_q", r.tau_q), ("tau_qp", r.tau_qp)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("ramp {name} must be non-negative and finite (got {v})")));
            }
        }
        if let Some(d) = &self.decoherence {
            d.validate()?;
        }
        let mut warnings = Vec::new();
        if self.delta < 5.0 * self.mu {
            warnings.push(format!(
                "delta/mu = {:.3} is below 5; the dispersive reduction may be inaccurate",
                self.delta / self.mu
            ));
        }
        if self.delta_prime < 5.0 * self.mu_prime {
            warnings.push(format!(
                "delta'/mu' = {:.3} is below 5; the dispersive reduction may be inaccurate",
                self.delta_prime / self.mu_prime
            ));
        }
        Ok(warnings)
    }

    /// Same parameters with `delta = ratio * mu` and `delta' = ratio * mu'`.
    pub fn with_detuning_ratio(&self, ratio: f64) -> Self {
        PhysicalParams { delta: ratio * self.mu, delta_prime: ratio * self.mu_prime, ..self.clone() }
    }

    /// Same parameters with both cavity lifetimes set to `lifetime` seconds.
    pub fn with_cavity_lifetime(&self, lifetime: f64) -> Self {
        let mut d = self.decoherence.unwrap_or_else(Decoherence::none);
        d.kappa_l = 1.0 / lifetime;
        d.kappa_r = 1.0 / lifetime;
        PhysicalParams { decoherence: Some(d), ..self.clone() }
    }

    pub fn without_decoherence(&self) -> Self {
        PhysicalParams { decoherence: None, ..self.clone() }
    }
}

impl Decoherence {
    pub fn validate(&self) -> Result<()> {
        for (species, q) in [("left", &self.left), ("right", &self.right), ("coupler", &self.coupler)] {
            for (name, v) in [("t1", q.t1), ("t2", q.t2), ("t1f", q.t1f), ("t2f", q.t2f)] {
                if !(v > 0.0) {
                    return Err(Error::Params(format!("{species} {name} must be positive (got {v})")));
                }
            }
            if q.t2 > 2.0 * q.t1 {
                return Err(Error::Params(format!(
                    "{species}: T2 = {:e} s exceeds 2 T1 = {:e} s, which is unphysical",
                    q.t2,
                    2.0 * q.t1
                )));
            }
            if species != "coupler" && q.t2f > 2.0 * q.t1f {
                return Err(Error::Params(format!(
                    "{species}: T2 of the f level ({:e} s) exceeds twice its T1 ({:e} s)",
                    q.t2f, q.t1f
                )));
            }
        }
        for (name, k) in [("kappa_l", self.kappa_l), ("kappa_r", self.kappa_r)] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Params(format!("{name} must be non-negative and finite (got {k})")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    couplings_mhz: CouplingsMhz,
    detunings_mhz: DetuningsMhz,
    ramps_ns: RampsNs,
    decoherence: Option<DecoherenceFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingsMhz {
    mu1: f64,
    mu1_tilde: f64,
    mu1p: f64,
    mu1p_tilde: f64,
    mu_al: f64,
    mu_ar: f64,
    mu: f64,
    mu_prime: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetuningsMhz {
    delta: f64,
    delta_prime: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RampsNs {
    tau_a: f64,
    tau_1: f64,
    tau_1p: f64,
    tau_q: f64,
    tau_qp: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecoherenceFile {
    left: Option<LifetimesUs>,
    right: Option<LifetimesUs>,
    coupler: Option<LifetimesUs>,
    cavity_l: Option<CavityFile>,
    cavity_r: Option<CavityFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LifetimesUs {
    t1_us: f64,
    t2_us: f64,
    t1f_us: Option<f64>,
    t2f_us: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum CavityFile {
    Quality { quality_factor: f64, freq_ghz: f64 },
    Lifetime { kappa_inv_us: f64 },
}

impl LifetimesUs {
    fn into_lifetimes(self) -> QubitLifetimes {
        QubitLifetimes {
            t1: seconds_from_us(self.t1_us),
            t2: seconds_from_us(self.t2_us),
            t1f: self.t1f_us.map_or(f64::INFINITY, seconds_from_us),
            t2f: self.t2f_us.map_or(f64::INFINITY, seconds_from_us),
        }
    }
}

impl CavityFile {
    fn kappa(&self) -> Result<f64> {
        match *self {
            CavityFile::Quality { quality_factor, freq_ghz } => {
                if !(quality_factor > 0.0 && freq_ghz > 0.0) {
                    return Err(Error::Params("cavity quality factor and frequency must be positive".into()));
                }
                Ok(1.0 / cavity_lifetime(quality_factor, TAU * (freq_ghz * 1e9)))
            }
            CavityFile::Lifetime { kappa_inv_us } => {
                if !(kappa_inv_us > 0.0) {
                    return Err(Error::Params("cavity lifetime must be positive".into()));
                }
                Ok(1.0 / seconds_from_us(kappa_inv_us))
            }
        }
    }
}

impl ParamsFile {
    fn into_params(self) -> Result<PhysicalParams> {
        let c = self.couplings_mhz;
        let r = self.ramps_ns;
        let decoherence = match self.decoherence {
            None => None,
            Some(d) => Some(Decoherence {
                left: d.left.map_or_else(QubitLifetimes::ideal, LifetimesUs::into_lifetimes),
                right: d.right.map_or_else(QubitLifetimes::ideal, LifetimesUs::into_lifetimes),
                coupler: d.coupler.map_or_else(QubitLifetimes::ideal, LifetimesUs::into_lifetimes),
                kappa_l: d.cavity_l.as_ref().map(CavityFile::kappa).transpose()?.unwrap_or(0.0),
                kappa_r: d.cavity_r.as_ref().map(CavityFile::kappa).transpose()?.unwrap_or(0.0),
            }),
        };
        let params = PhysicalParams {
            mu1: angular_from_mhz(c.mu1),
            mu1_tilde: angular_from_mhz(c.mu1_tilde),
            mu1p: angular_from_mhz(c.mu1p),
            mu1p_tilde: angular_from_mhz(c.mu1p_tilde),
            mu_al: angular_from_mhz(c.mu_al),
            mu_ar: angular_from_mhz(c.mu_ar),
            mu: angular_from_mhz(c.mu),
            mu_prime: angular_from_mhz(c.mu_prime),
            delta: angular_from_mhz(self.detunings_mhz.delta),
            delta_prime: angular_from_mhz(self.detunings_mhz.delta_prime),
            ramps: RampTimes {
                tau_a: seconds_from_ns(r.tau_a),
                tau_1: seconds_from_ns(r.tau_1),
                tau_1p: seconds_from_ns(r.tau_1p),
                tau_q: seconds_from_ns(r.tau_q),
                tau_qp: seconds_from_ns(r.tau_qp),
            },
            decoherence,
        };
        params.validate()?;
        Ok(params)
    }
}
