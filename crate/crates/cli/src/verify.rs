//! The `verify` command: quick consistency checks for a parameter set.

use anyhow::Result;
use ghz_transfer::hamiltonian::{h_dispersive_effective, h_dispersive_full, h_dispersive_reduced, h_resonant_ef, h_resonant_ge};
use ghz_transfer::schedule::solve_resonance;
use ghz_transfer::{
    build_schedule, parse_schedule, run_protocol, serialize_schedule, timing_budget, validate_schedule, Cavity, Checkpoint,
    GhzSpec, OperatorMatrix, PhysicalParams, RunOptions, Site, SystemLayout,
};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> VerifyCheck {
    VerifyCheck { name, passed, detail }
}

fn hermiticity(p: &PhysicalParams) -> Result<VerifyCheck> {
    let l = SystemLayout::symmetric(2)?;
    let mut ops: Vec<OperatorMatrix> = vec![
        h_resonant_ef(&l, Cavity::L, Site::Left(1), p.mu1)?,
        h_resonant_ge(&l, Cavity::L, Site::Left(1), p.mu1_tilde)?,
        h_resonant_ge(&l, Cavity::L, Site::Coupler, p.mu_al)?,
        h_resonant_ge(&l, Cavity::R, Site::Coupler, p.mu_ar)?,
        h_resonant_ge(&l, Cavity::R, Site::Right(1), p.mu1p_tilde)?,
        h_resonant_ef(&l, Cavity::R, Site::Right(1), p.mu1p)?,
        h_dispersive_effective(&l, p)?,
        h_dispersive_reduced(&l, p)?,
    ];
    for t in [0.0, 0.37 / p.delta, 1.9 / p.delta_prime] {
        ops.push(h_dispersive_full(&l, p, t)?);
    }
    let worst = ops.iter().map(|h| h.hermiticity_defect() / h.matrix().max_abs().max(1.0)).fold(0.0, f64::max);
    Ok(check("hermiticity", worst <= 1e-12, format!("largest relative |H - H^dag| = {worst:e}")))
}

fn oracle_chain(p: &PhysicalParams, n: usize, tol: f64) -> Result<VerifyCheck> {
    let s = build_schedule(p, n, tol)?;
    let l = SystemLayout::symmetric(n)?;
    let out = run_protocol(p, &GhzSpec::equal_weight(n), &l, &s, &RunOptions::default())?;
    let worst = out.checkpoints.iter().map(|c| c.fidelity).fold(1.0, f64::min);
    let fin = out.checkpoint(Checkpoint::Final).map_or(0.0, |c| c.fidelity);
    let passed = worst >= 1.0 - 1e-7 && fin >= 1.0 - 1e-6 && out.max_drift() < 1e-9 && out.max_top_fock() < 1e-6;
    let name = if n == 2 { "oracle-chain-n2" } else { "oracle-chain-n3" };
    Ok(check(
        name,
        passed,
        format!(
            "worst checkpoint {worst:.12}, final {fin:.12}, drift {:e}, top Fock {:e}",
            out.max_drift(),
            out.max_top_fock()
        ),
    ))
}

fn n_independence(p: &PhysicalParams, tol: f64) -> Result<VerifyCheck> {
    let base = build_schedule(p, 2, tol)?;
    let same = (3..=4).map(|n| build_schedule(p, n, tol)).collect::<ghz_transfer::Result<Vec<_>>>()?.iter().all(|s| *s == base);
    Ok(check("n-independence", same, format!("tau = {:e} s for n = 2, 3, 4", base.total_duration())))
}

fn budget_closed_form(p: &PhysicalParams, tol: f64) -> Result<VerifyCheck> {
    let s = build_schedule(p, 2, tol)?;
    let r = p.effective_rates();
    let sol = solve_resonance(r.lambda, r.lambda_prime, tol, ghz_transfer::schedule::DEFAULT_RESONANCE_BOUND)?;
    let closed = timing_budget(p, sol.m, sol.k);
    let b = s.budget();
    let rel = |a: f64, c: f64| if c == 0.0 { a.abs() } else { ((a - c) / c).abs() };
    let worst = [rel(b.tau_r, closed.tau_r), rel(b.tau_o, closed.tau_o), rel(b.tau_a, closed.tau_a), rel(b.tau, closed.tau)]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(check("budget-closed-form", worst < 1e-12, format!("largest relative difference {worst:e}")))
}

fn round_trip(p: &PhysicalParams, tol: f64) -> Result<VerifyCheck> {
    let mut failures = Vec::new();
    for n in 1..=4 {
        let s = build_schedule(p, n, tol)?;
        let l = SystemLayout::symmetric(n)?;
        let text = serialize_schedule(&s, &l);
        let ok = parse_schedule(&text)
            .ok()
            .and_then(|d| validate_schedule(&d, p).ok())
            .is_some_and(|v| v.schedule == s && serialize_schedule(&v.schedule, &v.layout) == text);
        if !ok {
            failures.push(n);
        }
    }
    Ok(check("dsl-round-trip", failures.is_empty(), format!("failing n: {failures:?}")))
}

/// Every check, in a fixed order.
pub fn run_verify(p: &PhysicalParams, resonance_tolerance: f64) -> Result<Vec<VerifyCheck>> {
    Ok(vec![
        hermiticity(p)?,
        budget_closed_form(p, resonance_tolerance)?,
        n_independence(p, resonance_tolerance)?,
        oracle_chain(p, 2, resonance_tolerance)?,
        oracle_chain(p, 3, resonance_tolerance)?,
        round_trip(p, resonance_tolerance)?,
    ])
}
