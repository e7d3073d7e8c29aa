//! The five-step pulse schedule, the phase-step resonance condition and the
//! timing budget.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Cavity, Site};
use crate::params::{EffectiveRates, PhysicalParams};

pub const DEFAULT_RESONANCE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_RESONANCE_BOUND: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    /// `g (c^dag |e><f| + h.c.)` on one qubit.
    ResonantEf,
    /// `g (c^dag |g><e| + h.c.)` on a qubit or the coupler.
    ResonantGe,
    /// Dispersive phase step on all spectators of both cavities.
    Dispersive,
}

impl SegmentKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SegmentKind::ResonantEf => "resonant-ef",
            SegmentKind::ResonantGe => "resonant-ge",
            SegmentKind::Dispersive => "dispersive",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "resonant-ef" => Some(SegmentKind::ResonantEf),
            "resonant-ge" => Some(SegmentKind::ResonantGe),
            "dispersive" => Some(SegmentKind::Dispersive),
            _ => None,
        }
    }
}

/// Which cavity modes a segment couples to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CavitySel {
    L,
    R,
    Both,
}

impl CavitySel {
    pub fn single(self) -> Option<Cavity> {
        match self {
            CavitySel::L => Some(Cavity::L),
            CavitySel::R => Some(Cavity::R),
            CavitySel::Both => None,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CavitySel::L => "L",
            CavitySel::R => "R",
            CavitySel::Both => "LR",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "L" => Some(CavitySel::L),
            "R" => Some(CavitySel::R),
            "LR" => Some(CavitySel::Both),
            _ => None,
        }
    }
}

/// The sites a segment acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteSel {
    One(Site),
    /// Qubits 2..n and 2'..n'.
    Spectators,
}

impl std::fmt::Display for SiteSel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SiteSel::One(s) => write!(f, "{s}"),
            SiteSel::Spectators => write!(f, "spectators"),
        }
    }
}

/// One Hamiltonian configuration held for `duration`, preceded by `ramp` of
/// level-adjustment clock time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub label: String,
    pub kind: SegmentKind,
    pub cavity: CavitySel,
    pub site: SiteSel,
    /// Coupling in rad/s. For a dispersive segment this is `lambda`.
    pub coupling: f64,
    /// `lambda'` of a dispersive segment.
    pub coupling_r: Option<f64>,
    /// Seconds.
    pub duration: f64,
    /// Seconds.
    pub ramp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSolution {
    pub m: u32,
    pub k: u32,
    /// `(2m+1) pi / lambda`, seconds.
    pub t3: f64,
    /// `|(2m+1)/lambda - (2k+1)/lambda'| / ((2m+1)/lambda)`.
    pub residual: f64,
}

/// Resonant, off-resonant and level-adjustment time, and their sum (seconds).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingBudget {
    pub tau_r: f64,
    pub tau_o: f64,
    pub tau_a: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub segments: Vec<PulseSegment>,
    /// Adjustment time after the last segment (decoupling qubit 1').
    pub final_ramp: f64,
}

impl Schedule {
    pub fn segment(&self, label: &str) -> Option<&PulseSegment> {
        self.segments.iter().find(|s| s.label == label)
    }

    pub fn tau_r(&self) -> f64 {
        self.segments.iter().filter(|s| s.kind != SegmentKind::Dispersive).map(|s| s.duration).sum()
    }

    pub fn tau_o(&self) -> f64 {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Dispersive).map(|s| s.duration).sum()
    }

    pub fn tau_a(&self) -> f64 {
        self.segments.iter().map(|s| s.ramp).sum::<f64>() + self.final_ramp
    }

    pub fn budget(&self) -> TimingBudget {
        let (tau_r, tau_o, tau_a) = (self.tau_r(), self.tau_o(), self.tau_a());
        TimingBudget { tau_r, tau_o, tau_a, tau: tau_r + tau_o + tau_a }
    }

    pub fn total_duration(&self) -> f64 {
        self.budget().tau
    }
}

/// Canonical segment labels in protocol order.
pub const CANONICAL_LABELS: [&str; 9] =
    ["step1a", "step1b", "step2a", "step2b", "step3", "step4a", "step4b", "step5a", "step5b"];

/// Photon-number factor `sqrt(n)` of the transition driven by a canonical
/// resonant segment; its duration is `pi / (2 * factor * coupling)`.
pub fn canonical_photon_factor(label: &str) -> Option<f64> {
    match label {
        "step1a" | "step2b" | "step4a" | "step5b" => Some(1.0),
        "step1b" | "step2a" | "step4b" | "step5a" => Some(SQRT_2),
        _ => None,
    }
}

/// Quarter Rabi period of a transition with effective coupling `factor * coupling`.
pub fn resonant_duration(coupling: f64, factor: f64) -> f64 {
    PI / (2.0 * factor * coupling)
}

/// Smallest `t3 = (2m+1) pi / lambda` that also equals `(2k+1) pi / lambda'`
/// within `tolerance` (relative), with `m, k <= bound`.
pub fn solve_resonance(lambda: f64, lambda_prime: f64, tolerance: f64, bound: u32) -> Result<ResonanceSolution> {
    if !(lambda > 0.0 && lambda_prime > 0.0 && lambda.is_finite() && lambda_prime.is_finite()) {
        return Err(Error::Params(format!("effective rates must be positive (lambda = {lambda}, lambda' = {lambda_prime})")));
    }
    let mut best: Option<(f64, u32, u32)> = None;
    for m in 0..=bound {
        let left = f64::from(2 * m + 1) / lambda;
        // (2k+1) closest to left * lambda'
        let target = left * lambda_prime;
        let k_real = (target - 1.0) / 2.0;
        let k_lo = k_real.floor().max(0.0) as u64;
        for k in [k_lo, k_lo + 1] {
            if k > u64::from(bound) {
                continue;
            }
            let k = k as u32;
            let right = f64::from(2 * k + 1) / lambda_prime;
            let residual = (left - right).abs() / left;
            if residual <= tolerance {
                return Ok(ResonanceSolution { m, k, t3: f64::from(2 * m + 1) * PI / lambda, residual });
            }
            if best.is_none_or(|(r, _, _)| residual < r) {
                best = Some((residual, m, k));
            }
        }
    }
    let (best_residual, best_m, best_k) = best.unwrap_or((f64::INFINITY, 0, 0));
    Err(Error::Resonance { lambda, lambda_prime, best_residual, best_m, best_k })
}

/// Cavity photon lifetime `Q / omega` in seconds (`omega` in rad/s).
pub fn cavity_lifetime(quality_factor: f64, omega: f64) -> f64 {
    quality_factor / omega
}

/// Timing budget straight from the closed-form sums: resonant time over the
/// eight sub-pulses, `(2m+1) pi / lambda` for the phase step, and
/// `6 tau_A + 3 tau_1 + 3 tau_1' + 2 tau_q + 2 tau_q'` for level adjustments.
pub fn timing_budget(params: &PhysicalParams, m: u32, _k: u32) -> TimingBudget {
    let p = params;
    let tau_r = PI / 2.0 * (1.0 / p.mu1 + 1.0 / p.mu1p + 1.0 / p.mu_al + 1.0 / p.mu_ar)
        + PI / (2.0 * SQRT_2) * (1.0 / p.mu1_tilde + 1.0 / p.mu1p_tilde + 1.0 / p.mu_al + 1.0 / p.mu_ar);
    let tau_o = f64::from(2 * m + 1) * PI / p.effective_rates().lambda;
    let r = &p.ramps;
    let tau_a = 6.0 * r.tau_a + 3.0 * r.tau_1 + 3.0 * r.tau_1p + 2.0 * r.tau_q + 2.0 * r.tau_qp;
    TimingBudget { tau_r, tau_o, tau_a, tau: tau_r + tau_o + tau_a }
}

/// Compiles `params` into the canonical schedule for `n` qubits per cavity.
///
/// Each segment carries the level-adjustment time spent right before it;
/// the adjustment that decouples qubit 1' afterwards is `final_ramp`. For
/// `n = 1` there are no spectators and the phase step is dropped.
pub fn build_schedule(params: &PhysicalParams, n: usize, resonance_tolerance: f64) -> Result<Schedule> {
    build_schedule_with_bound(params, n, resonance_tolerance, DEFAULT_RESONANCE_BOUND)
}

pub fn build_schedule_with_bound(
    params: &PhysicalParams,
    n: usize,
    resonance_tolerance: f64,
    bound: u32,
) -> Result<Schedule> {
    if n == 0 {
        return Err(Error::Params("n must be at least 1".into()));
    }
    params.validate()?;
    let p = params;
    let r = &p.ramps;
    let rates = EffectiveRates::from_params(p);
    let seg = |label: &str, kind, cavity, site, coupling: f64, ramp: f64| PulseSegment {
        label: label.to_string(),
        kind,
        cavity,
        site: SiteSel::One(site),
        coupling,
        coupling_r: None,
        duration: resonant_duration(coupling, canonical_photon_factor(label).expect("canonical label")),
        ramp,
    };
    use CavitySel::{L, R};
    use SegmentKind::{ResonantEf as Ef, ResonantGe as Ge};
    let mut segments = vec![
        seg("step1a", Ef, L, Site::Left(1), p.mu1, r.tau_1),
        seg("step1b", Ge, L, Site::Left(1), p.mu1_tilde, r.tau_1),
        seg("step2a", Ge, L, Site::Coupler, p.mu_al, r.tau_1 + r.tau_a),
        seg("step2b", Ge, R, Site::Coupler, p.mu_ar, r.tau_a),
    ];
    if n >= 2 {
        let sol = solve_resonance(rates.lambda, rates.lambda_prime, resonance_tolerance, bound)?;
        segments.push(PulseSegment {
            label: "step3".into(),
            kind: SegmentKind::Dispersive,
            cavity: CavitySel::Both,
            site: SiteSel::Spectators,
            coupling: rates.lambda,
            coupling_r: Some(rates.lambda_prime),
            duration: sol.t3,
            ramp: r.tau_a + r.tau_q + r.tau_qp,
        });
        segments.push(seg("step4a", Ge, L, Site::Coupler, p.mu_al, r.tau_q + r.tau_qp + r.tau_a));
    } else {
        segments.push(seg("step4a", Ge, L, Site::Coupler, p.mu_al, r.tau_a));
    }
    segments.extend([
        seg("step4b", Ge, R, Site::Coupler, p.mu_ar, r.tau_a),
        seg("step5a", Ge, R, Site::Right(1), p.mu1p_tilde, r.tau_a + r.tau_1p),
        seg("step5b", Ef, R, Site::Right(1), p.mu1p, r.tau_1p),
    ]);
    Ok(Schedule { segments, final_ramp: r.tau_1p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{PhysicalParams, RampTimes};

    #[test]
    fn equal_rates_give_shortest_time() {
        let s = solve_resonance(2.0, 2.0, 1e-6, 100).unwrap();
        assert_eq!((s.m, s.k), (0, 0));
        assert_eq!(s.t3, PI / 2.0);
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn triple_rate() {
        let s = solve_resonance(1.0, 3.0, 1e-9, 10).unwrap();
        assert_eq!((s.m, s.k), (0, 1));
        assert!((s.t3 - PI).abs() < 1e-15);
    }

    #[test]
    fn near_equal_within_tolerance() {
        let s = solve_resonance(1.0, 1.0 + 1e-12, 1e-9, 100).unwrap();
        assert_eq!((s.m, s.k), (0, 0));
    }

    #[test]
    fn even_ratio_is_unsolvable() {
        // (2k+1)/(2m+1) is never 2.
        let err = solve_resonance(1.0, 2.0, 1e-6, 30).unwrap_err();
        assert!(matches!(err, Error::Resonance { .. }));
    }

    #[test]
    fn schedule_shape() {
        let p = PhysicalParams::transmon_preset();
        let s = build_schedule(&p, 3, DEFAULT_RESONANCE_TOLERANCE).unwrap();
        let labels: Vec<_> = s.segments.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, CANONICAL_LABELS);
        assert!(s.segments.iter().all(|s| s.duration > 0.0 && s.duration.is_finite()));
        let b = s.budget();
        assert_eq!(b.tau, b.tau_r + b.tau_o + b.tau_a);
    }

    #[test]
    fn single_qubit_drops_phase_step() {
        let p = PhysicalParams::transmon_preset();
        let s = build_schedule(&p, 1, DEFAULT_RESONANCE_TOLERANCE).unwrap();
        assert_eq!(s.segments.len(), 8);
        assert!(s.segment("step3").is_none());
        assert_eq!(s.tau_o(), 0.0);
    }

    #[test]
    fn zero_ramps_give_zero_adjustment_time() {
        let mut p = PhysicalParams::transmon_preset();
        p.ramps = RampTimes::uniform(0.0);
        assert_eq!(build_schedule(&p, 2, 1e-6).unwrap().tau_a(), 0.0);
        assert_eq!(timing_budget(&p, 0, 0).tau_a, 0.0);
    }

    #[test]
    fn lifetime_is_linear_in_q() {
        let w = 2.0 * PI * 9.293e9;
        assert_eq!(cavity_lifetime(6e5, w), 2.0 * cavity_lifetime(3e5, w));
    }
}
