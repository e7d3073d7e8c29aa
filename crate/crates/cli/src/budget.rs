//! The `budget` command: where the protocol's clock time goes.

use std::fmt;

use anyhow::Result;
use ghz_transfer::schedule::TimingBudget;
use ghz_transfer::{build_schedule, PhysicalParams};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetRow {
    pub label: String,
    pub kind: &'static str,
    pub ramp_s: f64,
    pub duration_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetTable {
    pub n: usize,
    pub budget: TimingBudget,
    pub segments: Vec<BudgetRow>,
    pub final_ramp_s: f64,
}

pub fn budget_table(params: &PhysicalParams, n: usize, resonance_tolerance: f64) -> Result<BudgetTable> {
    let s = build_schedule(params, n, resonance_tolerance)?;
    Ok(BudgetTable {
        n,
        budget: s.budget(),
        segments: s
            .segments
            .iter()
            .map(|g| BudgetRow { label: g.label.clone(), kind: g.kind.keyword(), ramp_s: g.ramp, duration_s: g.duration })
            .collect(),
        final_ramp_s: s.final_ramp,
    })
}

/// `x` rounded to `digits` significant figures, without exponent.
pub fn sig_figs(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let scale = 10f64.powi(digits as i32 - 1 - magnitude);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

impl fmt::Display for BudgetTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:<12} {:>10} {:>12}", "segment", "kind", "ramp/ns", "pulse/ns")?;
        for r in &self.segments {
            writeln!(f, "{:<8} {:<12} {:>10.3} {:>12.3}", r.label, r.kind, r.ramp_s * 1e9, r.duration_s * 1e9)?;
        }
        writeln!(f, "{:<8} {:<12} {:>10.3}", "final", "", self.final_ramp_s * 1e9)?;
        writeln!(f)?;
        let b = &self.budget;
        writeln!(f, "tau_r  {:>8} ns   resonant", sig_figs(b.tau_r * 1e9, 3))?;
        writeln!(f, "tau_o  {:>8} ns   off-resonant", sig_figs(b.tau_o * 1e9, 3))?;
        writeln!(f, "tau_a  {:>8} ns   level adjustment", sig_figs(b.tau_a * 1e9, 2))?;
        writeln!(f, "tau    {:>8} us   total (n = {})", sig_figs(b.tau * 1e6, 2), self.n)
    }
}
